use crate::error::{Error, Result};
use crate::image::{from_u8, ImageTensor};
use crate::primitive::{PrimitiveKind, PrimitiveTensor};
use crate::segmentation::{Palette, SegmentationMap};

/// One-hot expansion: channel `labels[i, j]` of pixel `(i, j)` is 1.
pub fn encode_segmentation(seg: &SegmentationMap) -> Result<PrimitiveTensor> {
    seg.check()?;
    let n = seg.label_count();
    let mut data = vec![0.0f32; seg.height() * seg.width() * n];
    for (px, &label) in seg.labels().iter().enumerate() {
        data[px * n + label as usize] = 1.0;
    }
    Ok(PrimitiveTensor::from_parts_unchecked(
        PrimitiveKind::Segmentation,
        ImageTensor::from_raw(seg.height(), seg.width(), n, data),
        n,
    ))
}

/// Recovers the label grid from a Segmentation or Combined primitive.
pub fn decode_segmentation(prim: &PrimitiveTensor, palette: &Palette) -> Result<SegmentationMap> {
    let labels = prim
        .label_tensor()
        .ok_or_else(|| Error::InvalidConfig("edge primitives carry no segmentation".into()))?;
    if palette.len() != prim.label_count() {
        return Err(Error::mismatch(
            format!("{} palette entries", prim.label_count()),
            palette.len(),
        ));
    }
    let n = labels.channels();
    let grid = labels
        .data()
        .chunks_exact(n)
        .map(|px| {
            px.iter()
                .position(|&v| v == 1.0)
                .map(|l| l as u32)
                .ok_or_else(|| Error::Format("pixel without an active label".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    SegmentationMap::new(prim.height(), prim.width(), grid, palette.clone())
}

/// Stacks `[label channels…, edge channel]`.
pub fn compose_combined(edges: &PrimitiveTensor, seg: &PrimitiveTensor) -> Result<PrimitiveTensor> {
    if edges.kind() != PrimitiveKind::Edge || seg.kind() != PrimitiveKind::Segmentation {
        return Err(Error::InvalidConfig(format!(
            "expected (Edge, Segmentation), got ({:?}, {:?})",
            edges.kind(),
            seg.kind()
        )));
    }
    let tensor = seg.tensor().stack_channels(edges.tensor())?;
    Ok(PrimitiveTensor::from_parts_unchecked(
        PrimitiveKind::Combined,
        tensor,
        seg.label_count(),
    ))
}

/// RGB rendering: labels by palette color (black for edge-only), edge pixels
/// white on top.
pub fn primitive_to_display(prim: &PrimitiveTensor, palette: &Palette) -> Result<ImageTensor> {
    let (h, w) = (prim.height(), prim.width());
    let t = prim.tensor();
    let c = t.channels();
    let labels = match prim.kind() {
        PrimitiveKind::Edge => 0,
        _ => prim.label_count(),
    };
    let mut colors = Vec::with_capacity(labels);
    for id in 0..labels as u32 {
        let rgb = palette.color(id).ok_or(Error::MissingPaletteEntry(id))?;
        colors.push(rgb.map(from_u8));
    }
    let edge = prim.edge_channel();
    let mut out = Vec::with_capacity(h * w * 3);
    for px in t.data().chunks_exact(c) {
        let mut rgb = [0.0f32; 3];
        if labels > 0 {
            if let Some(l) = px[..labels].iter().position(|&v| v == 1.0) {
                rgb = colors[l];
            }
        }
        if let Some(e) = edge {
            if px[e] == 1.0 {
                rgb = [1.0; 3];
            }
        }
        out.extend_from_slice(&rgb);
    }
    Ok(ImageTensor::from_raw(h, w, 3, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(h: usize, w: usize, labels: Vec<u32>, n: usize) -> SegmentationMap {
        let colors: Vec<[u8; 3]> = (0..n).map(|i| [i as u8 * 40, 0, 255]).collect();
        SegmentationMap::new(h, w, labels, Palette::new(&colors)).unwrap()
    }

    #[test]
    fn single_label_is_one_full_channel() {
        let p = encode_segmentation(&seg(3, 3, vec![0; 9], 1)).unwrap();
        assert_eq!(p.channels(), 1);
        assert!(p.tensor().data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn two_by_one_map() {
        let p = encode_segmentation(&seg(2, 1, vec![0, 1], 2)).unwrap();
        assert_eq!(p.tensor().data(), &[1.0, 0.0, 0.0, 1.0]);
        p.check().unwrap();
    }

    #[test]
    fn non_contiguous_labels() {
        let palette = Palette::new(&[[0, 0, 0], [1, 1, 1]]);
        let mut bad = palette.clone();
        bad.labels[1].id = 2;
        assert!(matches!(
            SegmentationMap::new(1, 1, vec![0], bad),
            Err(Error::NonContiguousLabels(_))
        ));
    }

    #[test]
    fn combined_layout_and_projection() {
        let s = seg(2, 2, vec![0, 1, 2, 1], 3);
        let sp = encode_segmentation(&s).unwrap();
        let e = PrimitiveTensor::edge(ImageTensor::from_fn(2, 2, 1, |r, c, _| {
            (r == c) as u8 as f32
        }))
        .unwrap();
        let c = compose_combined(&e, &sp).unwrap();
        assert_eq!(c.channels(), 4);
        assert_eq!(c.label_count(), 3);
        c.check().unwrap();
        assert_eq!(&c.label_tensor().unwrap(), sp.tensor());
        assert_eq!(&c.edge_tensor().unwrap(), e.tensor());
        assert_eq!(decode_segmentation(&c, s.palette()).unwrap(), s);
    }

    #[test]
    fn combined_with_blank_edges() {
        let sp = encode_segmentation(&seg(2, 3, vec![0, 1, 0, 1, 0, 1], 2)).unwrap();
        let e = PrimitiveTensor::edge(ImageTensor::filled(2, 3, 1, 0.0)).unwrap();
        let c = compose_combined(&e, &sp).unwrap();
        for px in c.tensor().data().chunks_exact(3) {
            assert_eq!(px[2], 0.0);
        }
    }

    #[test]
    fn combined_dimension_mismatch() {
        let sp = encode_segmentation(&seg(2, 2, vec![0; 4], 1)).unwrap();
        let e = PrimitiveTensor::edge(ImageTensor::filled(2, 3, 1, 0.0)).unwrap();
        assert!(matches!(
            compose_combined(&e, &sp),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn display_conventions() {
        let e = PrimitiveTensor::edge(ImageTensor::from_fn(2, 2, 1, |r, _, _| r as f32)).unwrap();
        let d = primitive_to_display(&e, &Palette::default()).unwrap();
        assert_eq!(d.data(), &[0., 0., 0., 0., 0., 0., 1., 1., 1., 1., 1., 1.]);

        let blue = Palette::new(&[[0, 0, 255]]);
        let s = encode_segmentation(&SegmentationMap::new(2, 2, vec![0; 4], blue.clone()).unwrap())
            .unwrap();
        let d = primitive_to_display(&s, &blue).unwrap();
        assert!(d.data().chunks_exact(3).all(|p| p == [0.0, 0.0, 1.0]));

        let c = compose_combined(&e, &s).unwrap();
        let d = primitive_to_display(&c, &blue).unwrap();
        assert_eq!(d.get(0, 0, 2), 1.0);
        assert_eq!(d.get(0, 0, 0), 0.0);
        assert_eq!(d.get(1, 0, 0), 1.0);

        assert!(matches!(
            primitive_to_display(&c, &Palette::default()),
            Err(Error::MissingPaletteEntry(0))
        ));
    }
}
