use std::fmt::Write as _;
use std::path::Path;

use super::{TriMesh, Vec3};
use crate::error::MeshError;

/// Parses `v` and `f` records. Texture/normal indices in face records are
/// accepted and ignored; negative (relative) indices are resolved.
pub fn parse_obj(text: &str) -> Result<(Vec<Vec3>, Vec<[usize; 3]>), MeshError> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let mut c = [0.0; 3];
                for slot in &mut c {
                    let tok = it.next().ok_or_else(|| MeshError::Parse {
                        line: ln + 1,
                        msg: "vertex needs 3 coordinates".into(),
                    })?;
                    *slot = tok.parse().map_err(|_| MeshError::Parse {
                        line: ln + 1,
                        msg: format!("bad coordinate '{tok}'"),
                    })?;
                }
                vertices.push(Vec3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let mut idx = Vec::with_capacity(3);
                for tok in it {
                    let head = tok.split('/').next().unwrap_or("");
                    let i: i64 = head.parse().map_err(|_| MeshError::Parse {
                        line: ln + 1,
                        msg: format!("bad face index '{tok}'"),
                    })?;
                    let resolved = if i > 0 {
                        i - 1
                    } else if i < 0 {
                        vertices.len() as i64 + i
                    } else {
                        -1
                    };
                    if resolved < 0 {
                        return Err(MeshError::Parse {
                            line: ln + 1,
                            msg: format!("face index {i} out of range"),
                        });
                    }
                    idx.push(resolved as usize);
                }
                if idx.len() != 3 {
                    return Err(MeshError::NonTriangle { index: faces.len() });
                }
                faces.push([idx[0], idx[1], idx[2]]);
            }
            _ => {}
        }
    }
    Ok((vertices, faces))
}

pub fn load_obj(path: impl AsRef<Path>) -> Result<TriMesh, MeshError> {
    let text = std::fs::read_to_string(path)?;
    let (v, f) = parse_obj(&text)?;
    TriMesh::new(v, f)
}

/// Loads every `.obj` in `dir` (sorted by file name) as a pose of `rest`.
/// Each file must repeat the rest face section exactly.
pub fn load_pose_dir(dir: impl AsRef<Path>, rest: &TriMesh) -> Result<Vec<Vec<Vec3>>, MeshError> {
    let mut files: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("obj")))
        .collect();
    files.sort();
    let mut poses = Vec::with_capacity(files.len());
    for (i, p) in files.iter().enumerate() {
        let (v, f) = parse_obj(&std::fs::read_to_string(p)?)?;
        if v.len() != rest.num_vertices() {
            return Err(MeshError::PoseMismatch {
                expected: rest.num_vertices(),
                found: v.len(),
            });
        }
        if f.as_slice() != rest.faces() {
            return Err(MeshError::PoseConnectivity { index: i });
        }
        poses.push(v);
    }
    Ok(poses)
}

pub fn write_obj(vertices: &[Vec3], faces: &[[usize; 3]]) -> String {
    let mut s = String::new();
    for v in vertices {
        let _ = writeln!(s, "v {} {} {}", v.x, v.y, v.z);
    }
    for f in faces {
        let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    s
}
