package io.swagger.sample.data;

import java.util.ArrayList;
import java.util.List;

public class OrderRepository {
    private List<Order> orders = new ArrayList<Order>();

    public void add(Order order) {
        orders.add(order);
    }

    public void removeAll() {
        for (Order order : orders) {
            orders.remove(order);
        }
    }
}
