package fixtures;
import java.util.*;

public class Player32 {
    private long count;
    private int amount;
    private double price;
    public Player32() {
    }
    public long getCount() {
        return count;
    }
    public int getAmount() {
        return amount;
    }
    public double getPrice() {
        return price;
    }
    public List<String> names() {
        List<String> items = new ArrayList<>();
        items.add("Player32");
        return items;
    }
}
