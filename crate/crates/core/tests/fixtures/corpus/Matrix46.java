package fixtures;
import java.util.*;

public class Matrix46 {
    private double name;
    private String value;
    private long total;
    public Matrix46() {
    }
    public double getName() {
        return name;
    }
    public void setName(double name) {
        this.name = name;
    }
    public String getValue() {
        return value;
    }
    public void setValue(String value) {
        this.value = value;
    }
    public long getTotal() {
        return total;
    }
    public void setTotal(long total) {
        this.total = total;
    }
    public Map<String, Integer> counts() {
        Map<String, Integer> map = new HashMap<>();
        map.put("one", 1);
        return map;
    }
}
