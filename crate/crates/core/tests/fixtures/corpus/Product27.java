package fixtures;
import java.util.*;

public class Product27 {
    private long total;
    private double owner;
    private boolean height;
    private int name;
    public Product27() {
    }
    public long getTotal() {
        return total;
    }
    public double getOwner() {
        return owner;
    }
    public void setOwner(double owner) {
        this.owner = owner;
    }
    public boolean getHeight() {
        return height;
    }
    public void setHeight(boolean height) {
        this.height = height;
    }
    public int getName() {
        return name;
    }
    public int sum(int[] values) {
        int result = 0;
        for (int i = 0; i < values.length; i++) {
            result += values[i];
        }
        return result;
    }
}
