mod common;

use std::path::PathBuf;

use common::test_grid;
use gauss_occ::io::{
    decode_occ, encode_occ, export_ply, gen_synthetic, read_occ, read_scene, scene_from_str, scene_to_string,
    write_occ, write_ply, write_scene, ColorScheme, OccFile, SynthConfig,
};
use gauss_occ::{OccFrame, SparseInstanceOccupancy, VoxelGridSpec};
use proptest::prelude::*;

fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

#[test]
fn golden_scene_reserializes_identically() {
    let text = std::fs::read_to_string(golden("scene.jsonl")).unwrap();
    let scene = scene_from_str(&text).unwrap();
    assert_eq!(scene.grid.dims(), [8, 8, 4]);
    assert_eq!(scene.frames.len(), 3);
    assert_eq!(scene.frames[0].instances[0].track_id, Some(4));
    assert_eq!(scene.frames[0].instances[1].track_id, None);
    assert!(scene.frames[1].instances.is_empty());
    assert_eq!(scene_to_string(&scene), text);
}

#[test]
fn golden_occ_reencodes_identically() {
    let bytes = std::fs::read(golden("three_frames.gocc")).unwrap();
    let file = decode_occ(&bytes).unwrap();
    assert_eq!(file.frames.len(), 3);
    let f0 = &file.frames[0];
    assert_eq!(f0.grid.dims(), [8, 8, 4]);
    assert_eq!(f0.instances[0].voxels(), &[0, 1, 4, 37, 255]);
    assert_eq!(f0.instances[1].track_id, None);
    assert!(f0.instances[2].is_empty());
    assert!(file.frames[1].instances.is_empty());
    assert_eq!(file.frames[2].instances[0].score, 1.0);
    assert_eq!(encode_occ(&file), bytes);
}

#[test]
fn golden_ply() {
    let file = read_occ(golden("three_frames.gocc")).unwrap();
    let want = std::fs::read_to_string(golden("frame0_track.ply")).unwrap();
    assert_eq!(write_ply(&file.frames[0], ColorScheme::Track), want);
}

#[test]
fn synthetic_scene_roundtrips_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let (scene, gt) = gen_synthetic(&SynthConfig::new(3, 4, 6, 8, test_grid(0.4))).unwrap();

    let sp = dir.path().join("scene.jsonl");
    write_scene(&scene, &sp).unwrap();
    let back = read_scene(&sp).unwrap();
    assert_eq!(back, scene);
    assert_eq!(scene_to_string(&back), std::fs::read_to_string(&sp).unwrap());

    let op = dir.path().join("gt.gocc");
    write_occ(&gt, &op).unwrap();
    assert_eq!(read_occ(&op).unwrap(), gt);

    let pp = dir.path().join("f0.ply");
    export_ply(&gt.frames[0], &pp, ColorScheme::Class).unwrap();
    let ply = std::fs::read_to_string(&pp).unwrap();
    let total: usize = gt.frames[0].instances.iter().map(|i| i.len()).sum();
    assert!(ply.contains(&format!("element vertex {total}\n")));
}

fn small_grid() -> VoxelGridSpec {
    VoxelGridSpec::new([-2.0, -2.0, -1.0], [2.0, 2.0, 1.0], [0.5; 3]).unwrap()
}

fn arb_instance() -> impl Strategy<Value = SparseInstanceOccupancy> {
    let n = small_grid().num_voxels() as u32;
    (
        any::<u16>(),
        0.0f32..=1.0,
        proptest::option::of(any::<u32>()),
        proptest::collection::btree_set(0..n, 0..40),
    )
        .prop_map(move |(c, s, t, v)| {
            SparseInstanceOccupancy::new(c, s, t, v.into_iter().collect(), n as u64).unwrap()
        })
}

proptest! {
    #[test]
    fn occ_roundtrip(frames in proptest::collection::vec(proptest::collection::vec(arb_instance(), 0..5), 0..4)) {
        let file = OccFile {
            frames: frames.into_iter().map(|i| OccFrame::new(small_grid(), i)).collect(),
        };
        let bytes = encode_occ(&file);
        let back = decode_occ(&bytes).unwrap();
        prop_assert_eq!(&back, &file);
        prop_assert_eq!(encode_occ(&back), bytes);
    }

    #[test]
    fn truncated_occ_never_decodes(cut in 1usize..200) {
        let file = OccFile {
            frames: vec![OccFrame::new(
                small_grid(),
                vec![SparseInstanceOccupancy::new(1, 0.5, Some(2), (0..40).collect(), 256).unwrap()],
            )],
        };
        let bytes = encode_occ(&file);
        let cut = cut.min(bytes.len() - 1);
        prop_assert!(decode_occ(&bytes[..bytes.len() - cut]).is_err());
    }
}
