//! On-disk formats: geometry, annotation and detection JSON, plus the binary
//! tensor ("MXT1") and pooling-weight ("MXW1") files.
//!
//! JSON is written pretty-printed with a trailing newline so repeated runs
//! produce byte-identical files. Binary formats are little-endian throughout.
//!
//! Tensor layout: magic `MXT1`, rank as u8, rank u32 dims, then the payload
//! as row-major 4-byte IEEE-754 reals.
//!
//! Weight layout: magic `MXW1`, grid dims as 3 u32, grid origin and cell size
//! as 3 f64 each, bin_px u32, view count u32, then per view: n_x_bins u32,
//! min_y_bins u32, cross-section entry count u32 and entries (x_bin, ix, iy
//! as u32, weight f64), z entry count u32 and entries (y_bin, iz as u32,
//! weight f64), in stored order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::boxes::{Box2, Box3};
use crate::error::{CoreError, Result};
use crate::geometry::{pt, Rect, ScannerGeometry, ViewGeometry, VoxelGrid};
use crate::pooling::{SparseWeights, ViewWeights, XsecEntry, ZEntry};
use crate::synth::Recording;
use crate::tensor::Tensor;

/// Element cap for binary reads; rejects corrupt length fields before they
/// turn into huge allocations.
const MAX_ELEMENTS: usize = 1 << 31;

fn write_json<V: Serialize>(path: &Path, value: &V) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

fn read_json<V: DeserializeOwned>(path: &Path) -> Result<V> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

#[derive(Serialize, Deserialize)]
struct GeometryFile {
    belt_mm_per_px: f64,
    tunnel: TunnelFile,
    views: Vec<ViewFile>,
}

#[derive(Serialize, Deserialize)]
struct TunnelFile {
    min: [f64; 2],
    max: [f64; 2],
}

#[derive(Serialize, Deserialize)]
struct ViewFile {
    name: String,
    source: [f64; 2],
    detector: [[f64; 2]; 2],
    image_width_px: u32,
}

pub fn read_geometry(path: impl AsRef<Path>) -> Result<ScannerGeometry<f64>> {
    let raw: GeometryFile = read_json(path.as_ref())?;
    let tunnel = Rect::new(
        pt(raw.tunnel.min[0], raw.tunnel.min[1]),
        pt(raw.tunnel.max[0], raw.tunnel.max[1]),
    )?;
    let views = raw
        .views
        .into_iter()
        .map(|v| {
            ViewGeometry::new(
                &v.name,
                pt(v.source[0], v.source[1]),
                [pt(v.detector[0][0], v.detector[0][1]), pt(v.detector[1][0], v.detector[1][1])],
                v.image_width_px,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    ScannerGeometry::new(views, tunnel, raw.belt_mm_per_px)
}

pub fn write_geometry(path: impl AsRef<Path>, geom: &ScannerGeometry<f64>) -> Result<()> {
    let raw = GeometryFile {
        belt_mm_per_px: geom.belt_mm_per_px,
        tunnel: TunnelFile {
            min: [geom.tunnel.min.x, geom.tunnel.min.y],
            max: [geom.tunnel.max.x, geom.tunnel.max.y],
        },
        views: geom
            .views
            .iter()
            .map(|v| ViewFile {
                name: v.name.clone(),
                source: [v.source.x, v.source.y],
                detector: [
                    [v.detector[0].x, v.detector[0].y],
                    [v.detector[1].x, v.detector[1].y],
                ],
                image_width_px: v.image_width_px,
            })
            .collect(),
    };
    write_json(path.as_ref(), &raw)
}

/// One 2D ground-truth box, flat fields as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Box2Ann {
    pub class: String,
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl Box2Ann {
    pub fn from_box2(class: &str, b: &Box2<f64>) -> Self {
        Box2Ann { class: class.to_string(), cx: b.cx, cy: b.cy, w: b.w, h: b.h }
    }

    pub fn to_box2(&self) -> Result<Box2<f64>> {
        Box2::new(self.cx, self.cy, self.w, self.h)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewBoxes {
    pub view: String,
    pub boxes: Vec<Box2Ann>,
}

/// One 3D ground-truth box as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Box3Ann {
    pub class: String,
    pub center: [f64; 3],
    pub size: [f64; 3],
}

impl Box3Ann {
    pub fn from_box3(class: &str, b: &Box3<f64>) -> Self {
        Box3Ann { class: class.to_string(), center: b.center(), size: b.size() }
    }

    pub fn to_box3(&self) -> Result<Box3<f64>> {
        let [cx, cy, cz] = self.center;
        let [w, h, d] = self.size;
        Box3::new(cx, cy, cz, w, h, d)
    }
}

/// Annotations of one recording: per-view 2D boxes plus the 3D boxes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordingAnnotations {
    pub id: String,
    pub views: Vec<ViewBoxes>,
    pub boxes3d: Vec<Box3Ann>,
}

pub fn read_annotations(path: impl AsRef<Path>) -> Result<RecordingAnnotations> {
    read_json(path.as_ref())
}

pub fn write_annotations(path: impl AsRef<Path>, ann: &RecordingAnnotations) -> Result<()> {
    write_json(path.as_ref(), ann)
}

/// Ground truth of a synthetic recording in the annotation schema.
pub fn annotations_of_recording(
    geom: &ScannerGeometry<f64>,
    rec: &Recording,
) -> RecordingAnnotations {
    let views = geom
        .views
        .iter()
        .enumerate()
        .map(|(v, vg)| ViewBoxes {
            view: vg.name.clone(),
            boxes: rec
                .objects
                .iter()
                .zip(&rec.boxes2[v])
                .map(|(o, b)| Box2Ann::from_box2(&o.class, b))
                .collect(),
        })
        .collect();
    let boxes3d = rec.objects.iter().map(|o| Box3Ann::from_box3(&o.class, &o.box3)).collect();
    RecordingAnnotations { id: rec.id.clone(), views, boxes3d }
}

/// One scored 2D detection as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection2Rec {
    /// Image unit the detection belongs to, e.g. "rec-…/view0".
    pub unit: String,
    pub class: String,
    pub confidence: f64,
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

/// One scored 3D detection as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection3Rec {
    /// Recording unit the detection belongs to.
    pub unit: String,
    pub class: String,
    pub confidence: f64,
    pub center: [f64; 3],
    pub size: [f64; 3],
}

#[derive(Serialize, Deserialize)]
struct DetectionsFile<R> {
    detections: Vec<R>,
}

pub fn read_detections_2d(path: impl AsRef<Path>) -> Result<Vec<Detection2Rec>> {
    let f: DetectionsFile<Detection2Rec> = read_json(path.as_ref())?;
    Ok(f.detections)
}

pub fn write_detections_2d(path: impl AsRef<Path>, dets: &[Detection2Rec]) -> Result<()> {
    write_json(path.as_ref(), &DetectionsFile { detections: dets.to_vec() })
}

pub fn read_detections_3d(path: impl AsRef<Path>) -> Result<Vec<Detection3Rec>> {
    let f: DetectionsFile<Detection3Rec> = read_json(path.as_ref())?;
    Ok(f.detections)
}

pub fn write_detections_3d(path: impl AsRef<Path>, dets: &[Detection3Rec]) -> Result<()> {
    write_json(path.as_ref(), &DetectionsFile { detections: dets.to_vec() })
}

fn read_exact_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_exact_f32(r: &mut impl Read) -> Result<f32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(f32::from_le_bytes(b))
}

fn read_exact_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn expect_magic(r: &mut impl Read, magic: &[u8; 4], what: &str) -> Result<()> {
    let mut got = [0u8; 4];
    r.read_exact(&mut got)?;
    if &got != magic {
        return Err(CoreError::Format(format!("not a {what} file: bad magic {got:?}")));
    }
    Ok(())
}

fn expect_eof(r: &mut impl Read, what: &str) -> Result<()> {
    if r.read(&mut [0u8; 1])? != 0 {
        return Err(CoreError::Format(format!("trailing bytes after {what} payload")));
    }
    Ok(())
}

pub fn write_tensor(path: impl AsRef<Path>, t: &Tensor<f32>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(b"MXT1")?;
    let rank = u8::try_from(t.rank())
        .map_err(|_| CoreError::Format(format!("rank {} exceeds u8", t.rank())))?;
    w.write_all(&[rank])?;
    for &d in t.dims() {
        let d = u32::try_from(d).map_err(|_| CoreError::Format(format!("dim {d} exceeds u32")))?;
        w.write_all(&d.to_le_bytes())?;
    }
    for &v in t.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<Tensor<f32>> {
    let mut r = BufReader::new(File::open(path.as_ref())?);
    expect_magic(&mut r, b"MXT1", "tensor")?;
    let mut rank = [0u8; 1];
    r.read_exact(&mut rank)?;
    let mut dims = Vec::with_capacity(rank[0] as usize);
    for _ in 0..rank[0] {
        dims.push(read_exact_u32(&mut r)? as usize);
    }
    let len = dims
        .iter()
        .try_fold(1usize, |a, &d| a.checked_mul(d))
        .filter(|&l| l <= MAX_ELEMENTS)
        .ok_or_else(|| CoreError::Format(format!("tensor dims {dims:?} overflow")))?;
    let mut data = Vec::with_capacity(len);
    for _ in 0..len {
        data.push(read_exact_f32(&mut r)?);
    }
    expect_eof(&mut r, "tensor")?;
    Tensor::from_vec(&dims, data)
}

pub fn write_weights(path: impl AsRef<Path>, weights: &SparseWeights<f64>) -> Result<()> {
    weights.validate()?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(b"MXW1")?;
    for &d in &weights.grid.dims {
        let d = u32::try_from(d).map_err(|_| CoreError::Format(format!("dim {d} exceeds u32")))?;
        w.write_all(&d.to_le_bytes())?;
    }
    for &v in &weights.grid.origin {
        w.write_all(&v.to_le_bytes())?;
    }
    for &v in &weights.grid.cell_size {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&weights.bin_px.to_le_bytes())?;
    let n_views = u32::try_from(weights.views.len())
        .map_err(|_| CoreError::Format("too many views".into()))?;
    w.write_all(&n_views.to_le_bytes())?;
    for vw in &weights.views {
        w.write_all(&vw.n_x_bins.to_le_bytes())?;
        w.write_all(&vw.min_y_bins.to_le_bytes())?;
        let n = u32::try_from(vw.xsec.len())
            .map_err(|_| CoreError::Format("cross-section table too large".into()))?;
        w.write_all(&n.to_le_bytes())?;
        for e in &vw.xsec {
            w.write_all(&e.x_bin.to_le_bytes())?;
            w.write_all(&e.ix.to_le_bytes())?;
            w.write_all(&e.iy.to_le_bytes())?;
            w.write_all(&e.w.to_le_bytes())?;
        }
        let n = u32::try_from(vw.zmap.len())
            .map_err(|_| CoreError::Format("z table too large".into()))?;
        w.write_all(&n.to_le_bytes())?;
        for e in &vw.zmap {
            w.write_all(&e.y_bin.to_le_bytes())?;
            w.write_all(&e.iz.to_le_bytes())?;
            w.write_all(&e.w.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_weights(path: impl AsRef<Path>) -> Result<SparseWeights<f64>> {
    let mut r = BufReader::new(File::open(path.as_ref())?);
    expect_magic(&mut r, b"MXW1", "weight")?;
    let mut dims = [0usize; 3];
    for d in &mut dims {
        *d = read_exact_u32(&mut r)? as usize;
    }
    let mut origin = [0f64; 3];
    for v in &mut origin {
        *v = read_exact_f64(&mut r)?;
    }
    let mut cell_size = [0f64; 3];
    for v in &mut cell_size {
        *v = read_exact_f64(&mut r)?;
    }
    let grid = VoxelGrid::new(origin, cell_size, dims)?;
    let bin_px = read_exact_u32(&mut r)?;
    let n_views = read_exact_u32(&mut r)? as usize;
    let mut views = Vec::with_capacity(n_views.min(1024));
    for _ in 0..n_views {
        let n_x_bins = read_exact_u32(&mut r)?;
        let min_y_bins = read_exact_u32(&mut r)?;
        let n_xsec = read_exact_u32(&mut r)? as usize;
        if n_xsec > MAX_ELEMENTS {
            return Err(CoreError::Format("cross-section table too large".into()));
        }
        let mut xsec = Vec::with_capacity(n_xsec);
        for _ in 0..n_xsec {
            xsec.push(XsecEntry {
                x_bin: read_exact_u32(&mut r)?,
                ix: read_exact_u32(&mut r)?,
                iy: read_exact_u32(&mut r)?,
                w: read_exact_f64(&mut r)?,
            });
        }
        let n_z = read_exact_u32(&mut r)? as usize;
        if n_z > MAX_ELEMENTS {
            return Err(CoreError::Format("z table too large".into()));
        }
        let mut zmap = Vec::with_capacity(n_z);
        for _ in 0..n_z {
            zmap.push(ZEntry {
                y_bin: read_exact_u32(&mut r)?,
                iz: read_exact_u32(&mut r)?,
                w: read_exact_f64(&mut r)?,
            });
        }
        views.push(ViewWeights { n_x_bins, min_y_bins, xsec, zmap });
    }
    expect_eof(&mut r, "weight")?;
    let weights = SparseWeights { grid, bin_px, views };
    weights.validate()?;
    Ok(weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defaults::{default_geometry, default_grid};
    use crate::pooling::{compute_weights, WeightParams};
    use crate::synth::{gen_recording, SceneSpec};
    use tempfile::tempdir;

    #[test]
    fn geometry_roundtrip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("geom.json");
        let geom = default_geometry();
        write_geometry(&path, &geom).unwrap();
        assert_eq!(read_geometry(&path).unwrap(), geom);
    }

    #[test]
    fn geometry_file_is_validated_on_read() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("geom.json");
        // Source sits inside the tunnel: structurally valid JSON, bad scanner.
        std::fs::write(
            &path,
            r#"{
  "belt_mm_per_px": 1.5,
  "tunnel": {"min": [-310.0, 0.0], "max": [310.0, 420.0]},
  "views": [{"name": "v", "source": [0.0, 100.0],
             "detector": [[-400.0, 800.0], [400.0, 810.0]],
             "image_width_px": 64}]
}"#,
        )
        .unwrap();
        assert!(read_geometry(&path).is_err());
    }

    #[test]
    fn annotation_roundtrip_is_byte_stable() {
        let dir = tempdir().unwrap();
        let geom = default_geometry();
        let rec = gen_recording(&geom, &default_grid(), &SceneSpec::default()).unwrap();
        let ann = annotations_of_recording(&geom, &rec);

        let p1 = dir.path().join("a.json");
        let p2 = dir.path().join("b.json");
        write_annotations(&p1, &ann).unwrap();
        let back = read_annotations(&p1).unwrap();
        assert_eq!(back, ann);
        write_annotations(&p2, &back).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
        assert_eq!(ann.views.len(), 4);
        assert_eq!(ann.boxes3d.len(), rec.objects.len());
    }

    #[test]
    fn detection_files_roundtrip() {
        let dir = tempdir().unwrap();
        let p2 = dir.path().join("d2.json");
        let dets2 = vec![Detection2Rec {
            unit: "rec-1/view0".into(),
            class: "phone".into(),
            confidence: 0.9,
            cx: 10.0,
            cy: 20.0,
            w: 5.0,
            h: 6.0,
        }];
        write_detections_2d(&p2, &dets2).unwrap();
        assert_eq!(read_detections_2d(&p2).unwrap(), dets2);

        let p3 = dir.path().join("d3.json");
        let dets3 = vec![Detection3Rec {
            unit: "rec-1".into(),
            class: "phone".into(),
            confidence: 0.9,
            center: [0.0, 100.0, 200.0],
            size: [50.0, 60.0, 70.0],
        }];
        write_detections_3d(&p3, &dets3).unwrap();
        assert_eq!(read_detections_3d(&p3).unwrap(), dets3);
    }

    #[test]
    fn tensor_roundtrip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.mxt");
        let t = Tensor::from_vec(&[2, 3, 4], (0..24).map(|i| i as f32 * 0.5 - 3.0).collect())
            .unwrap();
        write_tensor(&path, &t).unwrap();
        assert_eq!(read_tensor(&path).unwrap(), t);
    }

    #[test]
    fn tensor_read_rejects_corruption() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.mxt");
        let t = Tensor::from_vec(&[2, 2], vec![1.0f32, 2.0, 3.0, 4.0]).unwrap();
        write_tensor(&path, &t).unwrap();

        let good = std::fs::read(&path).unwrap();
        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        std::fs::write(&path, &bad_magic).unwrap();
        assert!(read_tensor(&path).is_err());

        std::fs::write(&path, &good[..good.len() - 2]).unwrap();
        assert!(read_tensor(&path).is_err());

        let mut trailing = good.clone();
        trailing.push(0);
        std::fs::write(&path, &trailing).unwrap();
        assert!(read_tensor(&path).is_err());
    }

    #[test]
    fn weights_roundtrip_and_validation() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("w.mxw");
        let geom = default_geometry();
        let grid = VoxelGrid::new([-288.0, 18.0, 0.0], [36.0, 24.0, 36.0], [16, 16, 16]).unwrap();
        let weights = compute_weights(&geom, &grid, &WeightParams::default()).unwrap();
        write_weights(&path, &weights).unwrap();
        assert_eq!(read_weights(&path).unwrap(), weights);

        // Flip one cell index out of range; validate() must catch it on read.
        let mut bytes = std::fs::read(&path).unwrap();
        let header = 4 + 12 + 24 + 24 + 4 + 4;
        let ix_off = header + 8 + 4 + 4;
        bytes[ix_off..ix_off + 4].copy_from_slice(&u32::MAX.to_le_bytes());
        std::fs::write(&path, &bytes).unwrap();
        assert!(read_weights(&path).is_err());
    }
}
