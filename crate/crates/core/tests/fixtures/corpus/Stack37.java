package fixtures;
import java.util.*;

public class Stack37 {
    private boolean label;
    private boolean total;
    private long owner;
    public Stack37() {
    }
    public boolean getLabel() {
        return label;
    }
    public boolean getTotal() {
        return total;
    }
    public void setTotal(boolean total) {
        this.total = total;
    }
    public long getOwner() {
        return owner;
    }
    public void setOwner(long owner) {
        this.owner = owner;
    }
    public List<String> names() {
        List<String> items = new ArrayList<>();
        items.add("Stack37");
        return items;
    }
}
