package fixtures;
import java.util.*;

public class Account19 {
    private boolean value;
    private String size;
    private long price;
    public Account19() {
    }
    public boolean getValue() {
        return value;
    }
    public String getSize() {
        return size;
    }
    public long getPrice() {
        return price;
    }
    public void setPrice(long price) {
        this.price = price;
    }
    public void show() {
        System.out.println("Account19: " + toString());
    }
}
