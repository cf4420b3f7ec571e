package org.jd.gui.service.extension;

import java.io.File;
import java.net.URL;
import java.net.URLClassLoader;
import java.util.ArrayList;
import java.util.Arrays;

public class ExtensionService {
    protected static final ExtensionService EXTENSION_SERVICE = new ExtensionService();
    protected static final UrlComparator URL_COMPARATOR = new UrlComparator();
    protected ClassLoader extensionClassLoader;

    public static ExtensionService getInstance() {
        return EXTENSION_SERVICE;
    }

    protected void searchJarAndMetaInf(ArrayList<URL> urls, File directory) {
        File metaInf = new File(directory, "META-INF");
        if (metaInf.exists()) {
            urls.add(toUrl(directory));
        }
        File[] children = directory.listFiles();
        if (children == null) {
            return;
        }
        for (File child : children) {
            if (child.getName().endsWith(".jar")) {
                urls.add(toUrl(child));
            }
        }
    }

    protected void loadExtensions(File extDirectory) {
        ArrayList<URL> urls;

        urls = new ArrayList<URL>();
        searchJarAndMetaInf(urls, extDirectory);
        // sort so that extensions load in a stable order
        URL[] array = (URL[]) urls.toArray();
        Arrays.sort(array, URL_COMPARATOR);
        extensionClassLoader = new URLClassLoader(array, getClass().getClassLoader());
    }

    protected URL toUrl(File file) {
        try {
            return file.toURI().toURL();
        } catch (Exception e) {
            return null;
        }
    }
}
