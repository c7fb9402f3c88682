package fixtures;
import java.util.*;

public class Order2 {
    private int title;
    private boolean label;
    private double name;
    private String price;
    public Order2() {
    }
    public int getTitle() {
        return title;
    }
    public void setTitle(int title) {
        this.title = title;
    }
    public boolean getLabel() {
        return label;
    }
    public void setLabel(boolean label) {
        this.label = label;
    }
    public double getName() {
        return name;
    }
    public void setName(double name) {
        this.name = name;
    }
    public String getPrice() {
        return price;
    }
    public void setPrice(String price) {
        this.price = price;
    }
    public List<String> names() {
        List<String> items = new ArrayList<>();
        items.add("Order2");
        return items;
    }
}
