use std::fmt::Write as _;
use std::path::Path;

use super::IoError;
use crate::metrics::OccFrame;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ColorScheme {
    /// Color by track ID, falling back to the instance index.
    #[default]
    Track,
    Instance,
    Class,
}

// Golden-ratio hue walk: distinct keys get well-separated hues.
fn color(key: u64) -> [u8; 3] {
    let h = (key as f64 * 0.618_033_988_749_895).fract() * 6.0;
    let (s, v) = (0.75, 0.95);
    let c = v * s;
    let x = c * (1.0 - (h % 2.0 - 1.0).abs());
    let (r, g, b) = match h as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [r, g, b].map(|ch| ((ch + m) * 255.0).round() as u8)
}

fn instance_key(scheme: ColorScheme, index: usize, track: Option<u32>, class: u16) -> u64 {
    match scheme {
        // even keys for tracks, odd for untracked instances
        ColorScheme::Track => track.map_or(2 * index as u64 + 1, |t| 2 * t as u64),
        ColorScheme::Instance => index as u64,
        ColorScheme::Class => class as u64,
    }
}

/// ASCII PLY with one colored vertex per occupied voxel center.
pub fn write_ply(frame: &OccFrame, scheme: ColorScheme) -> String {
    let total: usize = frame.instances.iter().map(|i| i.len()).sum();
    let mut out = String::new();
    out.push_str("ply\nformat ascii 1.0\ncomment instance occupancy voxel centers\n");
    writeln!(out, "element vertex {total}").unwrap();
    out.push_str(
        "property float x\nproperty float y\nproperty float z\n\
         property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n",
    );
    for (n, inst) in frame.instances.iter().enumerate() {
        let [r, g, b] = color(instance_key(scheme, n, inst.track_id, inst.class_id));
        for &v in inst.voxels() {
            let idx = frame.grid.unravel(v).expect("validated occupancy");
            let [x, y, z] = frame.grid.voxel_center_unchecked(idx);
            writeln!(out, "{} {} {} {r} {g} {b}", x as f32, y as f32, z as f32).unwrap();
        }
    }
    out
}

pub fn export_ply(frame: &OccFrame, path: impl AsRef<Path>, scheme: ColorScheme) -> Result<(), IoError> {
    std::fs::write(path, write_ply(frame, scheme))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::VoxelGridSpec;
    use crate::instance::SparseInstanceOccupancy;

    fn frame() -> OccFrame {
        let g = VoxelGridSpec::occ3d();
        let n = g.num_voxels();
        OccFrame::new(
            g,
            vec![
                SparseInstanceOccupancy::new(0, 0.9, None, vec![0, 1, 2], n).unwrap(),
                SparseInstanceOccupancy::new(0, 0.8, Some(0), vec![10, 11], n).unwrap(),
            ],
        )
    }

    fn vertex_lines(ply: &str) -> Vec<&str> {
        ply.split("end_header\n").nth(1).unwrap().lines().collect()
    }

    #[test]
    fn vertex_count_matches() {
        let ply = write_ply(&frame(), ColorScheme::Track);
        assert!(ply.contains("element vertex 5\n"));
        assert_eq!(vertex_lines(&ply).len(), 5);
        assert!(vertex_lines(&ply)[0].starts_with("-39.8 -39.8 -0.8 "));
    }

    #[test]
    fn empty_frame() {
        let f = OccFrame::new(VoxelGridSpec::occ3d(), vec![]);
        let ply = write_ply(&f, ColorScheme::Track);
        assert!(ply.contains("element vertex 0\n"));
        assert!(ply.ends_with("end_header\n"));
    }

    #[test]
    fn instances_get_distinct_colors() {
        for scheme in [ColorScheme::Track, ColorScheme::Instance] {
            let ply = write_ply(&frame(), scheme);
            let lines = vertex_lines(&ply);
            let rgb = |l: &str| l.split(' ').skip(3).collect::<Vec<_>>().join(" ");
            assert_eq!(rgb(lines[0]), rgb(lines[2]));
            assert_ne!(rgb(lines[0]), rgb(lines[3]));
        }
    }

    #[test]
    fn palette_is_spread() {
        let colors: std::collections::HashSet<_> = (0..64).map(color).collect();
        assert_eq!(colors.len(), 64);
    }
}
