//! A short scripted screencast written to disk as pre-extracted frames, with
//! matching OCR pages, classifier labels, a code corpus and the ground truth.
//!
//! Script: a title slide, then a developer pastes the head of
//! `Calculator.java` and types the rest line by line (with pauses), a completion popup opens once, they switch to
//! `Main.java` for a few lines and come back to finish the first file.

use std::path::{Path, PathBuf};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::json;

use crate::{corrupt_word, render_ide, render_slide, word_boxes, Bounds, IdeContent, IdeLayout};

pub const WIDTH: u32 = 960;
pub const HEIGHT: u32 = 540;

pub const CALCULATOR: &[&str] = &[
    "public class Calculator {",
    "    private int total;",
    "    private int count;",
    "    public Calculator() {",
    "        total = 0;",
    "        count = 0;",
    "    }",
    "    public void add(int value) {",
    "        total = total + value;",
    "        count = count + 1;",
    "    }",
    "    public int average() {",
    "        return total / count;",
    "    }",
    "}",
];

pub const MAIN: &[&str] = &[
    "public class Main {",
    "    public static void main(String[] args) {",
    "        Calculator calculator = new Calculator();",
    "        calculator.add(42);",
    "        System.out.println(calculator.average());",
    "    }",
    "}",
];

#[derive(Debug, Clone, PartialEq)]
pub struct FrameTruth {
    pub t: u32,
    pub valid: bool,
    /// File shown in the editor, if any.
    pub file: Option<&'static str>,
    pub code: Vec<String>,
    pub editor: Option<Bounds>,
}

#[derive(Debug, Clone)]
pub struct ScreencastFixture {
    pub frames_dir: PathBuf,
    pub ocr_dir: PathBuf,
    pub labels: PathBuf,
    pub corpus_dir: PathBuf,
    pub truth: Vec<FrameTruth>,
    /// `(t, line_no, original, corrupted)` words garbled in the OCR pages.
    pub corruptions: Vec<(u32, usize, String, String)>,
    pub layout: IdeLayout,
}

enum Shot {
    Slide,
    Code {
        file: &'static str,
        lines: Vec<String>,
        row: Option<usize>,
        popup: bool,
    },
}

fn script() -> Vec<Shot> {
    let calc = |n: usize| CALCULATOR[..n].iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let main = |n: usize| MAIN[..n].iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let mut shots = vec![Shot::Slide, Shot::Slide, Shot::Slide];
    // the class skeleton is pasted in at once, then typed line by line
    for n in 4..=10 {
        // each line stays on screen for two seconds
        for _ in 0..2 {
            shots.push(Shot::Code {
                file: "Calculator.java",
                lines: calc(n),
                row: Some(n - 1),
                popup: false,
            });
        }
    }
    shots.push(Shot::Code {
        file: "Calculator.java",
        lines: calc(10),
        row: Some(9),
        popup: true,
    });
    for n in 3..=MAIN.len() {
        shots.push(Shot::Code {
            file: "Main.java",
            lines: main(n),
            row: Some(n - 1),
            popup: false,
        });
    }
    for n in 11..=CALCULATOR.len() {
        for _ in 0..2 {
            shots.push(Shot::Code {
                file: "Calculator.java",
                lines: calc(n),
                row: Some(n - 1),
                popup: false,
            });
        }
    }
    shots
}

/// Writes the fixture under `dir`. OCR pages carry one garbled identifier in
/// every third code frame; the seed picks which.
pub fn write_screencast(dir: &Path, seed: u64) -> std::io::Result<ScreencastFixture> {
    let frames_dir = dir.join("frames");
    let ocr_dir = dir.join("ocr");
    let corpus_dir = dir.join("corpus");
    for d in [&frames_dir, &ocr_dir, &corpus_dir] {
        std::fs::create_dir_all(d)?;
    }
    let mut rng = StdRng::seed_from_u64(seed);
    let layout = IdeLayout::standard(WIDTH, HEIGHT);
    let explorer: Vec<String> = vec!["src".into(), "  Calculator.java".into(), "  Main.java".into()];
    let mut truth = Vec::new();
    let mut corruptions = Vec::new();
    let mut labels = Vec::new();

    for (t, shot) in script().into_iter().enumerate() {
        let t = t as u32;
        let (img, ft) = match shot {
            Shot::Slide => (
                render_slide(WIDTH, HEIGHT, "Java Classes", &["fields and methods", "objects"]),
                FrameTruth {
                    t,
                    valid: false,
                    file: None,
                    code: Vec::new(),
                    editor: None,
                },
            ),
            Shot::Code {
                file,
                lines,
                row,
                popup,
            } => {
                let img = render_ide(
                    &layout,
                    &IdeContent {
                        code: &lines,
                        highlight_row: row,
                        popup: popup.then(|| layout.popup(0.15)),
                        explorer: &explorer,
                    },
                );
                (
                    img,
                    FrameTruth {
                        t,
                        valid: !popup,
                        file: Some(file),
                        code: lines,
                        editor: (!popup).then(|| layout.editor()),
                    },
                )
            }
        };
        img.save(frames_dir.join(format!("{t}.png")))
            .map_err(std::io::Error::other)?;
        labels.push(json!({"t": t, "valid": ft.valid}));

        let mut words: Vec<serde_json::Value> = Vec::new();
        let boxes = word_boxes(&layout, &ft.code, layout.editor());
        let garble = ft.valid && t.is_multiple_of(3) && !boxes.is_empty();
        let target = if garble {
            // an identifier-looking word of at least four letters
            let picks: Vec<usize> = (0..boxes.len())
                .filter(|&i| boxes[i].0.len() >= 4 && boxes[i].0.chars().all(|c| c.is_ascii_alphabetic()))
                .collect();
            (!picks.is_empty()).then(|| picks[rng.random_range(0..picks.len())])
        } else {
            None
        };
        for (i, (text, b)) in boxes.iter().enumerate() {
            let mut text = text.clone();
            if Some(i) == target {
                let bad = corrupt_word(&text, &mut rng);
                let line_no = ((b.1 + 1) / crate::CELL_H) as usize + 1;
                corruptions.push((t, line_no, text.clone(), bad.clone()));
                text = bad;
            }
            words.push(json!({"text": text, "box": [b.0, b.1, b.2, b.3]}));
        }
        std::fs::write(
            ocr_dir.join(format!("{t}.json")),
            serde_json::to_vec_pretty(&json!({ "words": words }))?,
        )?;
        truth.push(ft);
    }

    let labels_path = dir.join("labels.json");
    std::fs::write(&labels_path, serde_json::to_vec_pretty(&labels)?)?;
    // two checkouts of the same project, so every line shape occurs twice
    for project in ["a", "b"] {
        let d = corpus_dir.join(project);
        std::fs::create_dir_all(&d)?;
        std::fs::write(d.join("Calculator.java"), CALCULATOR.join("\n") + "\n")?;
        std::fs::write(d.join("Main.java"), MAIN.join("\n") + "\n")?;
    }

    Ok(ScreencastFixture {
        frames_dir,
        ocr_dir,
        labels: labels_path,
        corpus_dir,
        truth,
        corruptions,
        layout,
    })
}
