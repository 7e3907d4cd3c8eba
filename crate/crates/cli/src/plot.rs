//! Static PNG rendering of windows and models. Coordinate-pair vertices map
//! straight onto the canvas; other generators get a BFS-ring layout.

use std::collections::HashMap;

use image::{Rgb, RgbImage};

use coarsegrid_core::error::{Error, Result};
use coarsegrid_core::graph::GraphHandle;
use coarsegrid_core::model::MinorModel;
use coarsegrid_core::vertex::VertexId;

const BG: Rgb<u8> = Rgb([250, 250, 248]);
const EDGE: Rgb<u8> = Rgb([200, 200, 205]);
const VERT: Rgb<u8> = Rgb([120, 120, 130]);
const SET: Rgb<u8> = Rgb([200, 40, 40]);
const PATH: Rgb<u8> = Rgb([30, 90, 200]);

fn layout(g: &GraphHandle) -> HashMap<u32, (f64, f64)> {
    let mut out = HashMap::new();
    let all_pairs = g
        .vertices()
        .iter()
        .all(|v| matches!(v, VertexId::Pair { .. }));
    if all_pairs {
        for (i, v) in g.vertices().iter().enumerate() {
            if let VertexId::Pair { x, y } = v {
                out.insert(i as u32, (*x as f64, -(*y as f64)));
            }
        }
    } else {
        // BFS rings around the basepoint
        let n = g.vertex_count() as u32;
        let mut per_ring: HashMap<u32, Vec<u32>> = HashMap::new();
        for i in 0..n {
            per_ring.entry(g.dist_base(i)).or_default().push(i);
        }
        for (ring, members) in per_ring {
            let r = ring as f64 + 0.2;
            let count = members.len().max(1) as f64;
            for (t, &i) in members.iter().enumerate() {
                let angle = 2.0 * std::f64::consts::PI * (t as f64) / count;
                out.insert(i, (r * angle.cos(), r * angle.sin()));
            }
        }
    }
    out
}

fn draw_line(img: &mut RgbImage, a: (i64, i64), b: (i64, i64), color: Rgb<u8>) {
    let (mut x0, mut y0) = a;
    let (x1, y1) = b;
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        if x0 >= 0 && y0 >= 0 && (x0 as u32) < img.width() && (y0 as u32) < img.height() {
            img.put_pixel(x0 as u32, y0 as u32, color);
        }
        if x0 == x1 && y0 == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x0 += sx;
        }
        if e2 <= dx {
            err += dx;
            y0 += sy;
        }
    }
}

fn dot(img: &mut RgbImage, p: (i64, i64), color: Rgb<u8>) {
    for dx in -1..=1i64 {
        for dy in -1..=1i64 {
            let (x, y) = (p.0 + dx, p.1 + dy);
            if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
                img.put_pixel(x as u32, y as u32, color);
            }
        }
    }
}

pub fn plot_window(g: &GraphHandle, model: Option<&MinorModel>, path: &str) -> Result<()> {
    let pos = layout(g);
    let (mut minx, mut maxx, mut miny, mut maxy) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in pos.values() {
        minx = minx.min(x);
        maxx = maxx.max(x);
        miny = miny.min(y);
        maxy = maxy.max(y);
    }
    let span = (maxx - minx).max(maxy - miny).max(1.0);
    let size = 1200u32;
    let margin = 20.0;
    let scale = (size as f64 - 2.0 * margin) / span;
    let to_px = |i: u32| -> (i64, i64) {
        let (x, y) = pos[&i];
        (
            ((x - minx) * scale + margin) as i64,
            ((y - miny) * scale + margin) as i64,
        )
    };
    let mut img = RgbImage::from_pixel(size, size, BG);
    for i in 0..g.vertex_count() as u32 {
        for &j in g.adj_row(i) {
            if j > i {
                draw_line(&mut img, to_px(i), to_px(j), EDGE);
            }
        }
    }
    for i in 0..g.vertex_count() as u32 {
        dot(&mut img, to_px(i), VERT);
    }
    if let Some(m) = model {
        for p in m.branch_paths.values() {
            let idxs: Vec<u32> = p.iter().filter_map(|v| g.idx(v)).collect();
            for w in idxs.windows(2) {
                draw_line(&mut img, to_px(w[0]), to_px(w[1]), PATH);
            }
            for &i in &idxs {
                dot(&mut img, to_px(i), PATH);
            }
        }
        for s in m.branch_sets.values() {
            for v in s {
                if let Some(i) = g.idx(v) {
                    dot(&mut img, to_px(i), SET);
                }
            }
        }
    }
    img.save(path).map_err(|e| Error::Schema(format!("cannot write plot: {e}")))?;
    Ok(())
}
