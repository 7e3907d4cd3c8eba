//! End-to-end pipeline runs on the planar grid, re-verified through the
//! independent certificate checker.

use coarsegrid_core::cert::{check_certificate, Mode, Verdict};
use coarsegrid_core::error::Error;
use coarsegrid_core::generators::GeneratorSpec;
use coarsegrid_core::graph::{GraphHandle, Window};
use coarsegrid_core::model::{fatness, validate_model};
use coarsegrid_core::pipeline::{pipeline_halfgrid, Source, DEFAULT_SPARE};
use coarsegrid_core::ray::Ray;
use coarsegrid_core::vertex::VertexId;

fn grid(radius: u32) -> GraphHandle {
    GraphHandle::instantiate(
        GeneratorSpec::Grid2d,
        Window { basepoint: VertexId::pair(0, 0), radius },
    )
    .unwrap()
}

#[test]
fn kfat_3x3_k2_auto() {
    let g = grid(120);
    let cert = pipeline_halfgrid(
        &g,
        Mode::Kfat { k: 2 },
        3,
        3,
        Source::Auto { automorphism: None },
        DEFAULT_SPARE,
        0,
    )
    .unwrap();
    assert!(validate_model(&g, &cert.model).valid);
    let f = fatness(&g, &cert.model).unwrap();
    assert!(f.achieved.unwrap() >= 2, "{:?}", f.achieved);
    assert_eq!(check_certificate(&cert).unwrap(), Verdict::Verified);
}

#[test]
fn kfat_4x4_k3_radius_200() {
    let g = grid(200);
    let cert = pipeline_halfgrid(
        &g,
        Mode::Kfat { k: 3 },
        4,
        4,
        Source::Auto { automorphism: None },
        DEFAULT_SPARE,
        0,
    )
    .unwrap();
    let f = fatness(&g, &cert.model).unwrap();
    assert!(f.achieved.unwrap() >= 3, "{:?}", f.achieved);
    assert_eq!(check_certificate(&cert).unwrap(), Verdict::Verified);
}

#[test]
fn kfat_rejects_family_at_2k_minus_2() {
    let g = grid(120);
    let k = 3u32;
    // hand family separated by exactly 2K-2
    let sep = (2 * k - 2) as i64;
    let rays: Vec<Ray> = (0..4)
        .map(|i| {
            let y = 1 + i * sep;
            let r = g.radius() as i64 - y;
            Ray::finite(((-r)..=r).map(|x| VertexId::pair(x, y)).collect())
        })
        .collect();
    let separations = coarsegrid_core::family::measure_separations(&g, &rays).unwrap();
    let fam = coarsegrid_core::family::RayFamily { rays, schedule: vec![k; 4], separations };
    let err = pipeline_halfgrid(
        &g,
        Mode::Kfat { k },
        4,
        4,
        Source::Family(fam),
        DEFAULT_SPARE,
        0,
    )
    .unwrap_err();
    match err {
        Error::SeparationTooSmall { measured, required, k: kk } => {
            assert_eq!(measured, 2 * k - 2);
            assert_eq!(required, 2 * k - 1);
            assert_eq!(kk, k);
        }
        other => panic!("unexpected error {other}"),
    }
    // the message cites the 2K-1 bound
    let msg = Error::SeparationTooSmall { measured: 4, required: 5, k: 3 }.to_string();
    assert!(msg.contains("2K-1"));
}

#[test]
fn kfat_on_hexhalfgrid_with_its_own_columns() {
    // the hexagonal half-grid carries the construction with unit connectors
    let g = GraphHandle::instantiate(
        GeneratorSpec::HexHalfGrid,
        Window { basepoint: VertexId::pair(0, 0), radius: 70 },
    )
    .unwrap();
    let rays: Vec<Ray> = (0..3)
        .map(|x| {
            let mut prefix = Vec::new();
            let mut y = 0i64;
            loop {
                let v = VertexId::pair(x, y);
                if !g.contains(&v) {
                    break;
                }
                prefix.push(v);
                y += 1;
            }
            Ray::finite(prefix)
        })
        .collect();
    let separations = coarsegrid_core::family::measure_separations(&g, &rays).unwrap();
    let fam = coarsegrid_core::family::RayFamily { rays, schedule: vec![1; 3], separations };
    let cert = pipeline_halfgrid(
        &g,
        Mode::Kfat { k: 1 },
        3,
        3,
        Source::Family(fam),
        DEFAULT_SPARE,
        0,
    )
    .unwrap();
    // every horizontal is a single rung edge (class-3 lift of length 1)
    for h in &cert.hex_horizontals {
        assert_eq!(h.path.len(), 2, "{:?}", h.path);
    }
    let f = fatness(&g, &cert.model).unwrap();
    assert!(f.achieved.unwrap() >= 1);
    assert_eq!(check_certificate(&cert).unwrap(), Verdict::Verified);
}

#[test]
fn ultrafat_2x2_small() {
    let g = grid(240);
    let cert = pipeline_halfgrid(
        &g,
        Mode::Ultrafat,
        2,
        2,
        Source::Auto { automorphism: None },
        DEFAULT_SPARE,
        0,
    )
    .unwrap();
    let table = cert.verification.ultrafat.as_ref().unwrap();
    assert!(table.passes_to(2));
    assert_eq!(check_certificate(&cert).unwrap(), Verdict::Verified);
}
