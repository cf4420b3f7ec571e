@Abstract(name="_ABSTRACT_1", val="ArrayList, Set, List, Collection, HashSet, LinkedList, Vector, TreeSet, LinkedHashSet, ArrayDeque")
public void pattern() {
  _ABSTRACT_1 $v1;
  _WILDCARD_1[] $v2 = (_WILDCARD_1[]) $v1.toArray();
}
