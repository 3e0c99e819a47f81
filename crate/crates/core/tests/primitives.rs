mod common;

use proptest::prelude::*;

use common::Fixture;
use tpsaug::image::{load_image, save_image, ImageTensor};
use tpsaug::primitive::PrimitiveKind;
use tpsaug::primitives::{
    compose_combined, decode_segmentation, encode_segmentation, extract_edges, EdgeParams,
};
use tpsaug::rng::{derive_stream, SeedSpec};
use tpsaug::segmentation::{Palette, SegmentationMap};

fn palette(n: usize) -> Palette {
    let colors: Vec<[u8; 3]> = (0..n)
        .map(|i| [i as u8 * 40, 255 - i as u8 * 30, 7])
        .collect();
    Palette::new(&colors)
}

/// Overlapping flat discs. Their boundaries produce exact magnitude ties.
fn blobs(seed: u64, h: usize, w: usize, ch: usize) -> ImageTensor {
    let mut rng = Fixture::new(seed);
    let centers: Vec<(f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.range(0.0, h as f64),
                rng.range(0.0, w as f64),
                rng.range(2.0, 8.0),
            )
        })
        .collect();
    ImageTensor::from_fn(h, w, ch, |r, c, k| {
        let v: f64 = centers
            .iter()
            .map(|&(cr, cc, rad)| {
                let d2 = (r as f64 - cr).powi(2) + (c as f64 - cc).powi(2);
                if d2 < rad * rad {
                    0.8
                } else {
                    0.0
                }
            })
            .sum::<f64>()
            .min(1.0);
        (v * (1.0 - 0.1 * k as f64)) as f32
    })
}

#[test]
fn single_label_is_all_ones() {
    let seg = SegmentationMap::new(3, 5, vec![0; 15], palette(1)).unwrap();
    let p = encode_segmentation(&seg).unwrap();
    assert_eq!(p.channels(), 1);
    assert!(p.tensor().data().iter().all(|&v| v == 1.0));
}

#[test]
fn combined_projections_recover_constituents() {
    let mut rng = Fixture::new(4);
    let labels = (0..12 * 9).map(|_| (rng.next_u64() % 3) as u32).collect();
    let seg =
        encode_segmentation(&SegmentationMap::new(12, 9, labels, palette(3)).unwrap()).unwrap();
    let edge = extract_edges(&blobs(2, 12, 9, 1), &EdgeParams::default()).unwrap();
    let comb = compose_combined(&edge, &seg).unwrap();
    assert_eq!(comb.kind(), PrimitiveKind::Combined);
    assert_eq!(comb.channels(), 4);
    assert_eq!(&comb.tensor().slice_channels(0, 3).unwrap(), seg.tensor());
    assert_eq!(&comb.tensor().slice_channels(3, 4).unwrap(), edge.tensor());
}

#[test]
fn two_streams_differ_by_index() {
    let s = SeedSpec::new(7);
    let a: Vec<u64> = {
        let mut r = derive_stream(s, 0);
        (0..100).map(|_| r.next_u64()).collect()
    };
    let b: Vec<u64> = {
        let mut r = derive_stream(s, 1);
        (0..100).map(|_| r.next_u64()).collect()
    };
    assert_ne!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn image_round_trip_within_half_step(seed in any::<u64>(), h in 1usize..20, w in 1usize..20, three in any::<bool>()) {
        let ch = if three { 3 } else { 1 };
        let img = Fixture::new(seed).image(h, w, ch);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("img.png");
        save_image(&img, &p).unwrap();
        let back = load_image(&p).unwrap();
        prop_assert_eq!(back.channels(), ch);
        let worst = img.data().iter().zip(back.data()).map(|(a, b)| (a - b).abs()).fold(0.0f32, f32::max);
        prop_assert!(worst as f64 <= 1.0 / 510.0 + 1e-7, "{}", worst);
    }

    #[test]
    fn streams_are_reproducible(master in any::<u64>(), stream in any::<u64>(), index in any::<u64>()) {
        let seed = SeedSpec::with_stream(master, stream);
        let mut a = derive_stream(seed, index);
        let mut b = derive_stream(seed, index);
        for _ in 0..64 {
            prop_assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn segmentation_round_trip(seed in any::<u64>(), labels in 1usize..6, h in 1usize..17, w in 1usize..17) {
        let mut rng = Fixture::new(seed);
        let grid = (0..h * w).map(|_| (rng.next_u64() % labels as u64) as u32).collect();
        let seg = SegmentationMap::new(h, w, grid, palette(labels)).unwrap();
        let prim = encode_segmentation(&seg).unwrap();
        prim.check().unwrap();
        prop_assert_eq!(decode_segmentation(&prim, seg.palette()).unwrap(), seg);
    }

    #[test]
    fn edges_are_binary_and_scale_invariant(seed in any::<u64>(), c in 0.05f32..=1.0, three in any::<bool>()) {
        // Noise images have no exact magnitude ties, so f32 rounding of the
        // scaled samples cannot flip a suppression decision.
        let ch = if three { 3 } else { 1 };
        let img = Fixture::new(seed).image(24, 28, ch);
        let scaled = ImageTensor::new(24, 28, ch, img.data().iter().map(|v| v * c).collect()).unwrap();
        let params = EdgeParams::default();
        let a = extract_edges(&img, &params).unwrap();
        let b = extract_edges(&scaled, &params).unwrap();
        prop_assert!(a.tensor().data().iter().all(|&v| v == 0.0 || v == 1.0));
        prop_assert_eq!(a, b);
    }

    #[test]
    fn power_of_two_scaling_is_exact_with_ties(seed in any::<u64>(), k in 1i32..6, three in any::<bool>()) {
        let ch = if three { 3 } else { 1 };
        let img = blobs(seed, 24, 28, ch);
        let c = 0.5f32.powi(k);
        let scaled = ImageTensor::new(24, 28, ch, img.data().iter().map(|v| v * c).collect()).unwrap();
        let params = EdgeParams::default();
        prop_assert_eq!(extract_edges(&img, &params).unwrap(), extract_edges(&scaled, &params).unwrap());
    }
}
