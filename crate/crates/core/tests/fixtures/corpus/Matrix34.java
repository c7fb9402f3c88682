package fixtures;
import java.util.*;

public class Matrix34 {
    private long owner;
    private double label;
    private String index;
    public Matrix34() {
    }
    public long getOwner() {
        return owner;
    }
    public void setOwner(long owner) {
        this.owner = owner;
    }
    public double getLabel() {
        return label;
    }
    public String getIndex() {
        return index;
    }
    public void setIndex(String index) {
        this.index = index;
    }
    public Map<String, Integer> counts() {
        Map<String, Integer> map = new HashMap<>();
        map.put("one", 1);
        return map;
    }
}
