//! Placeholder item images: a colour swatch over the item's attribute labels.

use sha2::{Digest, Sha256};

pub const SIZE: usize = 128;
const SCALE: usize = 2;
const SWATCH: usize = 24;
const LINE: usize = 14;
const MARGIN: usize = 4;

/// 3×5 glyphs, `#` lit.
const GLYPHS: &[(char, [&str; 5])] = &[
    ('a', [".#.", "#.#", "###", "#.#", "#.#"]),
    ('b', ["##.", "#.#", "##.", "#.#", "##."]),
    ('c', [".##", "#..", "#..", "#..", ".##"]),
    ('d', ["##.", "#.#", "#.#", "#.#", "##."]),
    ('e', ["###", "#..", "##.", "#..", "###"]),
    ('f', ["###", "#..", "##.", "#..", "#.."]),
    ('g', [".##", "#..", "#.#", "#.#", ".##"]),
    ('h', ["#.#", "#.#", "###", "#.#", "#.#"]),
    ('i', ["###", ".#.", ".#.", ".#.", "###"]),
    ('j', ["..#", "..#", "..#", "#.#", ".#."]),
    ('k', ["#.#", "#.#", "##.", "#.#", "#.#"]),
    ('l', ["#..", "#..", "#..", "#..", "###"]),
    ('m', ["#.#", "###", "###", "#.#", "#.#"]),
    ('n', ["##.", "#.#", "#.#", "#.#", "#.#"]),
    ('o', [".#.", "#.#", "#.#", "#.#", ".#."]),
    ('p', ["##.", "#.#", "##.", "#..", "#.."]),
    ('q', [".#.", "#.#", "#.#", "##.", ".##"]),
    ('r', ["##.", "#.#", "##.", "#.#", "#.#"]),
    ('s', [".##", "#..", ".#.", "..#", "##."]),
    ('t', ["###", ".#.", ".#.", ".#.", ".#."]),
    ('u', ["#.#", "#.#", "#.#", "#.#", "###"]),
    ('v', ["#.#", "#.#", "#.#", "#.#", ".#."]),
    ('w', ["#.#", "#.#", "###", "###", "#.#"]),
    ('x', ["#.#", "#.#", ".#.", "#.#", "#.#"]),
    ('y', ["#.#", "#.#", ".#.", ".#.", ".#."]),
    ('z', ["###", "..#", ".#.", "#..", "###"]),
    ('0', ["###", "#.#", "#.#", "#.#", "###"]),
    ('1', [".#.", "##.", ".#.", ".#.", "###"]),
    ('2', ["##.", "..#", ".#.", "#..", "###"]),
    ('3', ["##.", "..#", ".#.", "..#", "##."]),
    ('4', ["#.#", "#.#", "###", "..#", "..#"]),
    ('5', ["###", "#..", "##.", "..#", "##."]),
    ('6', [".##", "#..", "###", "#.#", "###"]),
    ('7', ["###", "..#", ".#.", ".#.", ".#."]),
    ('8', ["###", "#.#", "###", "#.#", "###"]),
    ('9', ["###", "#.#", "###", "..#", "##."]),
    ('-', ["...", "...", "###", "...", "..."]),
    ('_', ["...", "...", "...", "...", "###"]),
    ('.', ["...", "...", "...", "...", ".#."]),
    ('?', ["##.", "..#", ".#.", "...", ".#."]),
];

fn glyph(c: char) -> &'static [&'static str; 5] {
    let c = c.to_ascii_lowercase();
    GLYPHS.iter().find(|g| g.0 == c).map_or(&GLYPHS[GLYPHS.len() - 1].1, |g| &g.1)
}

const NAMED: &[(&str, [u8; 3])] = &[
    ("red", [200, 30, 40]),
    ("blue", [40, 70, 200]),
    ("black", [20, 20, 20]),
    ("white", [245, 245, 245]),
    ("green", [40, 160, 60]),
    ("yellow", [230, 200, 30]),
    ("pink", [240, 140, 180]),
    ("purple", [120, 50, 160]),
    ("orange", [240, 130, 20]),
    ("grey", [128, 128, 128]),
    ("gray", [128, 128, 128]),
    ("brown", [120, 70, 30]),
];

/// The first label naming a colour picks the swatch; otherwise the colour
/// is derived from the labels.
pub fn swatch_colour(labels: &[&str]) -> [u8; 3] {
    for l in labels {
        if let Some((_, rgb)) = NAMED.iter().find(|(n, _)| n == l) {
            return *rgb;
        }
    }
    let d = Sha256::digest(labels.join(" ").as_bytes());
    [64 + d[0] / 2, 64 + d[1] / 2, 64 + d[2] / 2]
}

struct Canvas {
    px: Vec<u8>,
}

impl Canvas {
    fn fill(&mut self, x0: usize, y0: usize, w: usize, h: usize, rgb: [u8; 3]) {
        for y in y0..(y0 + h).min(SIZE) {
            for x in x0..(x0 + w).min(SIZE) {
                let i = (y * SIZE + x) * 3;
                self.px[i..i + 3].copy_from_slice(&rgb);
            }
        }
    }

    fn text(&mut self, x0: usize, y0: usize, s: &str, rgb: [u8; 3]) {
        let per = (3 + 1) * SCALE;
        let fit = (SIZE - x0) / per;
        for (n, c) in s.chars().take(fit).enumerate() {
            for (row, bits) in glyph(c).iter().enumerate() {
                for (col, b) in bits.chars().enumerate() {
                    if b == '#' {
                        self.fill(x0 + n * per + col * SCALE, y0 + row * SCALE, SCALE, SCALE, rgb);
                    }
                }
            }
        }
    }
}

/// RGB PNG of `SIZE × SIZE` pixels.
pub fn render(item_id: u32, labels: &[&str]) -> Vec<u8> {
    let mut c = Canvas { px: vec![255; SIZE * SIZE * 3] };
    let rgb = swatch_colour(labels);
    c.fill(0, 0, SIZE, SWATCH, rgb);
    let ink = if u32::from(rgb[0]) + u32::from(rgb[1]) + u32::from(rgb[2]) > 3 * 140 { [0, 0, 0] } else { [255, 255, 255] };
    c.text(MARGIN, (SWATCH - 5 * SCALE) / 2, &item_id.to_string(), ink);
    for (i, l) in labels.iter().enumerate() {
        let y = SWATCH + MARGIN + i * LINE;
        if y + 5 * SCALE > SIZE {
            break;
        }
        c.text(MARGIN, y, l, [30, 30, 30]);
    }
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, SIZE as u32, SIZE as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let mut w = enc.write_header().expect("png header to memory");
        w.write_image_data(&c.px).expect("png data to memory");
    }
    out
}
