package fixtures;
import java.util.*;

public class Vehicle9 {
    private long total;
    private long level;
    private long price;
    public Vehicle9() {
    }
    public long getTotal() {
        return total;
    }
    public void setTotal(long total) {
        this.total = total;
    }
    public long getLevel() {
        return level;
    }
    public void setLevel(long level) {
        this.level = level;
    }
    public long getPrice() {
        return price;
    }
    public void setPrice(long price) {
        this.price = price;
    }
    public List<String> names() {
        List<String> items = new ArrayList<>();
        items.add("Vehicle9");
        return items;
    }
}
