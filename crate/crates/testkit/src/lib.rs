//! Synthetic screencast material for tests: IDE-like screenshots with known
//! window geometry, slides, plain frames, code snippets and OCR-style
//! corruptions.
//!
//! Rectangles are `(x, y, w, h)` tuples so this crate stays independent of the
//! pipeline types.

pub mod screencast;

use image::{Rgb, RgbImage};
use rand::seq::IndexedRandom;
use rand::Rng;

pub type Bounds = (u32, u32, u32, u32);

/// Text cell size in pixels.
pub const CELL_W: u32 = 7;
pub const CELL_H: u32 = 14;
/// Thickness of drawn window borders.
pub const BORDER: u32 = 2;

const BORDER_LUMA: u8 = 40;
const EDITOR_BG: u8 = 250;
const PANEL_BG: u8 = 232;
const MENU_BG: u8 = 220;
// low enough that glyph strokes stay below Canny's strong threshold
const TEXT_LUMA: u8 = 170;
const HIGHLIGHT_LUMA: u8 = 160;

fn gray(v: u8) -> Rgb<u8> {
    Rgb([v, v, v])
}

pub fn fill(img: &mut RgbImage, (x, y, w, h): Bounds, c: Rgb<u8>) {
    let (iw, ih) = img.dimensions();
    for yy in y..(y + h).min(ih) {
        for xx in x..(x + w).min(iw) {
            img.put_pixel(xx, yy, c);
        }
    }
}

pub fn hline(img: &mut RgbImage, y: u32, x0: u32, x1: u32) {
    fill(img, (x0, y, x1.saturating_sub(x0), BORDER), gray(BORDER_LUMA));
}

pub fn vline(img: &mut RgbImage, x: u32, y0: u32, y1: u32) {
    fill(img, (x, y0, BORDER, y1.saturating_sub(y0)), gray(BORDER_LUMA));
}

/// Outline of a box, borders drawn inside the bounds.
pub fn outline(img: &mut RgbImage, (x, y, w, h): Bounds) {
    hline(img, y, x, x + w);
    hline(img, y + h - BORDER, x, x + w);
    vline(img, x, y, y + h);
    vline(img, x + w - BORDER, y, y + h);
}

/// A 5x8 pseudo-glyph: a fixed bit pattern derived from the character, so
/// identical text renders identically and different text differs.
fn glyph(c: char) -> [u8; 8] {
    let mut rows = [0u8; 8];
    if c.is_whitespace() {
        return rows;
    }
    let mut h = (c as u32).wrapping_mul(2_654_435_761) ^ 0x9e37_79b9;
    for r in rows.iter_mut().take(7) {
        h ^= h << 13;
        h ^= h >> 17;
        h ^= h << 5;
        *r = (h & 0x1f) as u8 | 0x04;
    }
    rows
}

pub fn draw_text(img: &mut RgbImage, x: u32, y: u32, text: &str, scale: u32, luma: u8) {
    let (iw, ih) = img.dimensions();
    for (i, c) in text.chars().enumerate() {
        let gx = x + i as u32 * CELL_W * scale;
        for (r, bits) in glyph(c).iter().enumerate() {
            for col in 0..5 {
                if bits & (1 << col) == 0 {
                    continue;
                }
                for dy in 0..scale {
                    for dx in 0..scale {
                        let px = gx + col * scale + dx;
                        let py = y + 3 * scale + r as u32 * scale + dy;
                        if px < iw && py < ih {
                            img.put_pixel(px, py, gray(luma));
                        }
                    }
                }
            }
        }
    }
}

/// Window arrangement of a synthetic IDE: menu bar on top, file explorer on
/// the left, console at the bottom, status bar below everything, optional
/// outline panel on the right and optional tab strip above the editor. The
/// explorer and console carry a header strip each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdeLayout {
    pub width: u32,
    pub height: u32,
    pub menu_y: u32,
    pub explorer_x: u32,
    pub console_y: u32,
    pub outline_x: Option<u32>,
    pub tab_y: Option<u32>,
}

impl IdeLayout {
    pub fn standard(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            menu_y: 28,
            explorer_x: width / 5,
            console_y: height * 3 / 4,
            outline_x: None,
            tab_y: None,
        }
    }

    pub fn random(rng: &mut impl Rng, width: u32, height: u32) -> Self {
        let menu_y = rng.random_range(24..36);
        let explorer_x = rng.random_range(width * 3 / 20..width / 4);
        let console_y = rng.random_range(height * 7 / 10..height * 4 / 5);
        let outline_x = rng.random_bool(0.5).then(|| rng.random_range(width * 17 / 20..width * 9 / 10));
        let tab_y = rng.random_bool(0.5).then(|| menu_y + rng.random_range(24..32));
        Self {
            width,
            height,
            menu_y,
            explorer_x,
            console_y,
            outline_x,
            tab_y,
        }
    }

    fn editor_top(&self) -> u32 {
        self.tab_y.unwrap_or(self.menu_y)
    }

    fn editor_right(&self) -> u32 {
        self.outline_x.unwrap_or(self.width)
    }

    /// The editor rectangle, measured between border centre lines.
    pub fn editor(&self) -> Bounds {
        let x = self.explorer_x + BORDER / 2;
        let y = self.editor_top() + BORDER / 2;
        let right = match self.outline_x {
            Some(o) => o + BORDER / 2,
            None => self.width,
        };
        (x, y, right - x, self.console_y + BORDER / 2 - y)
    }

    /// Top-left pixel of the first text cell in the editor.
    pub fn text_origin(&self) -> (u32, u32) {
        (self.explorer_x + BORDER + 6, self.editor_top() + BORDER + 4)
    }

    /// Text rows that fit in the editor.
    pub fn status_y(&self) -> u32 {
        self.height - 22
    }

    pub fn rows(&self) -> usize {
        ((self.console_y - self.text_origin().1) / CELL_H) as usize
    }

    /// A popup covering `frac` of the editor, roughly centred.
    pub fn popup(&self, frac: f64) -> Bounds {
        let (ex, ey, ew, eh) = self.editor();
        let side = frac.sqrt();
        let w = (f64::from(ew) * side) as u32;
        let h = (f64::from(eh) * side) as u32;
        (ex + (ew - w) / 2, ey + (eh - h) / 2, w, h)
    }
}

/// What one frame shows on top of the layout.
#[derive(Debug, Clone, Default)]
pub struct IdeContent<'a> {
    pub code: &'a [String],
    /// Current-line highlight band behind this text row.
    pub highlight_row: Option<usize>,
    pub popup: Option<Bounds>,
    pub explorer: &'a [String],
}

pub fn render_ide(layout: &IdeLayout, content: &IdeContent) -> RgbImage {
    let (w, h) = (layout.width, layout.height);
    let mut img = RgbImage::from_pixel(w, h, gray(PANEL_BG));
    fill(&mut img, (0, 0, w, layout.menu_y), gray(MENU_BG));
    let top = layout.editor_top();
    let right = layout.editor_right();
    fill(
        &mut img,
        (layout.explorer_x, top, right - layout.explorer_x, layout.console_y - top),
        gray(EDITOR_BG),
    );

    let (tx, ty) = layout.text_origin();
    if let Some(row) = content.highlight_row {
        let y = ty + row as u32 * CELL_H;
        fill(
            &mut img,
            (layout.explorer_x + BORDER, y, right - layout.explorer_x - BORDER, CELL_H),
            gray(HIGHLIGHT_LUMA),
        );
    }
    for (i, line) in content.code.iter().take(layout.rows()).enumerate() {
        let max_chars = ((right - tx) / CELL_W) as usize;
        let shown: String = line.chars().take(max_chars.saturating_sub(1)).collect();
        draw_text(&mut img, tx, ty + i as u32 * CELL_H, &shown, 1, TEXT_LUMA);
    }
    for (i, name) in content.explorer.iter().enumerate() {
        let y = layout.menu_y + 24 + BORDER + 4 + i as u32 * CELL_H;
        if y + CELL_H < layout.status_y() {
            draw_text(&mut img, 6, y, name, 1, TEXT_LUMA);
        }
    }
    draw_text(&mut img, 8, 6, "File Edit View Run", 1, TEXT_LUMA);

    hline(&mut img, layout.menu_y, 0, w);
    vline(&mut img, layout.explorer_x, layout.menu_y, layout.status_y());
    hline(&mut img, layout.console_y, layout.explorer_x, w);
    hline(&mut img, layout.status_y(), 0, w);
    hline(&mut img, layout.menu_y + 24, 0, layout.explorer_x);
    hline(&mut img, layout.console_y + 24, layout.explorer_x, w);
    if let Some(o) = layout.outline_x {
        vline(&mut img, o, layout.menu_y, layout.console_y);
    }
    if let Some(t) = layout.tab_y {
        hline(&mut img, t, layout.explorer_x, right);
    }

    if let Some(p) = content.popup {
        fill(&mut img, p, Rgb([250, 246, 214]));
        outline(&mut img, p);
        for i in 0..(p.3 / CELL_H).saturating_sub(1) {
            draw_text(&mut img, p.0 + 8, p.1 + 4 + i * CELL_H, "suggestion()", 1, TEXT_LUMA);
        }
    }
    img
}

/// A presentation slide: flat background, large title and a few bullet
/// lines, no window borders.
pub fn render_slide(width: u32, height: u32, title: &str, bullets: &[&str]) -> RgbImage {
    let mut img = RgbImage::from_pixel(width, height, Rgb([30, 60, 110]));
    draw_text(&mut img, width / 10, height / 8, title, 4, 235);
    for (i, b) in bullets.iter().enumerate() {
        draw_text(&mut img, width / 8, height / 3 + i as u32 * 40, b, 2, 220);
    }
    img
}

pub fn uniform(width: u32, height: u32, luma: u8) -> RgbImage {
    RgbImage::from_pixel(width, height, gray(luma))
}

/// Word boxes `(text, (x, y, w, h))` of code rendered by [`render_ide`],
/// relative to `region` (normally the editor rectangle), as an OCR engine
/// would report them for that crop.
pub fn word_boxes(layout: &IdeLayout, code: &[String], region: Bounds) -> Vec<(String, Bounds)> {
    let (tx, ty) = layout.text_origin();
    let mut out = Vec::new();
    for (row, line) in code.iter().take(layout.rows()).enumerate() {
        let mut col = 0u32;
        for piece in line.split(' ') {
            if !piece.is_empty() {
                let x = tx + col * CELL_W;
                let y = ty + row as u32 * CELL_H + 2;
                out.push((
                    piece.to_string(),
                    (x.saturating_sub(region.0), y.saturating_sub(region.1), piece.chars().count() as u32 * CELL_W, CELL_H - 3),
                ));
            }
            col += piece.chars().count() as u32 + 1;
        }
    }
    out
}

const TYPES: &[&str] = &["String", "JFrame", "JButton", "ArrayList", "HashMap", "Scanner", "Thread", "Properties"];
const NAMES: &[&str] = &[
    "frame", "button", "counter", "result", "message", "values", "reader", "buffer", "config", "listener", "window",
    "panel", "total", "index", "builder",
];
const METHODS: &[&str] = &["setSize", "setVisible", "addListener", "append", "println", "start", "getValue", "update"];

/// One plausible line of Java.
pub fn java_line(rng: &mut impl Rng) -> String {
    let ty = *TYPES.choose(rng).expect("nonempty");
    let name = *NAMES.choose(rng).expect("nonempty");
    let other = *NAMES.choose(rng).expect("nonempty");
    let method = *METHODS.choose(rng).expect("nonempty");
    match rng.random_range(0..5) {
        0 => format!("{ty} {name} = new {ty}();"),
        1 => format!("{name}.{method}({other});"),
        2 => format!("int {name} = {other}.{method}() + {};", rng.random_range(1..100)),
        3 => format!("if ({name} != null) {{ {other}.{method}(); }}"),
        _ => format!("return {name}.{method}({other}, {});", rng.random_range(1..10)),
    }
}

/// Characters OCR engines commonly confuse.
const CONFUSIONS: &[(char, char)] = &[
    ('l', '1'),
    ('1', 'l'),
    ('O', '0'),
    ('o', '0'),
    ('e', 'c'),
    ('i', 'l'),
    ('n', 'h'),
    ('a', 'o'),
    ('S', '5'),
    ('t', 'f'),
    ('u', 'v'),
    ('B', '8'),
];

/// Applies exactly one character edit (substitution, deletion or insertion)
/// to `word`; the result always differs from the input.
pub fn corrupt_word(word: &str, rng: &mut impl Rng) -> String {
    let chars: Vec<char> = word.chars().collect();
    assert!(!chars.is_empty(), "cannot corrupt an empty word");
    loop {
        let i = rng.random_range(0..chars.len());
        let mut out = chars.clone();
        match rng.random_range(0..3) {
            0 => {
                let c = chars[i];
                let sub = CONFUSIONS
                    .iter()
                    .find(|(from, _)| *from == c)
                    .map(|(_, to)| *to)
                    .unwrap_or(if c == 'x' { 'k' } else { 'x' });
                out[i] = sub;
            }
            1 if chars.len() > 1 => {
                out.remove(i);
            }
            _ => {
                let c = *['i', 'l', 'r', 'n'].choose(rng).expect("nonempty");
                out.insert(i, c);
            }
        }
        let s: String = out.into_iter().collect();
        if s != word {
            return s;
        }
    }
}
