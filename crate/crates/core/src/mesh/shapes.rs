//! Procedural test garments and primitives.
//!
//! All generators produce outward-oriented meshes. Surfaces with a natural
//! axis (tubes, skirts) use +y as the axis so the default grain `(0, 1, 0)`
//! runs along them. Generators that are mirror-symmetric about x = 0 keep
//! their triangulation symmetric too.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use super::{TriMesh, Vec3};

fn make(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> TriMesh {
    TriMesh::new(vertices, faces).expect("generated mesh is valid")
}

pub fn cube() -> TriMesh {
    let v = (0..8)
        .map(|i| Vec3::new((i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64))
        .collect();
    let f = vec![
        [0, 2, 1], [1, 2, 3], // z = 0
        [4, 5, 6], [5, 7, 6], // z = 1
        [0, 1, 4], [1, 5, 4], // y = 0
        [2, 6, 3], [3, 6, 7], // y = 1
        [0, 4, 2], [2, 4, 6], // x = 0
        [1, 3, 5], [3, 7, 5], // x = 1
    ];
    make(v, f)
}

/// Flat `w` x `h` sheet in the xy-plane centred at the origin, `nx` x `ny`
/// quads. Diagonals flip at x = 0 so the sheet is mirror-symmetric there.
pub fn grid(nx: usize, ny: usize, w: f64, h: f64) -> TriMesh {
    let mut v = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            v.push(Vec3::new(
                w * (i as f64 / nx as f64 - 0.5),
                h * (j as f64 / ny as f64 - 0.5),
                0.0,
            ));
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut f = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            if 2 * i < nx {
                f.push([a, b, c]);
                f.push([a, c, d]);
            } else {
                f.push([a, b, d]);
                f.push([b, c, d]);
            }
        }
    }
    make(v, f)
}

/// Vertices on concentric rings (ring k has 6k vertices) in the xy-plane.
fn ring_disk(rings: usize) -> (Vec<(f64, f64)>, Vec<[usize; 3]>) {
    let mut polar = vec![(0.0, 0.0)];
    let mut starts = vec![0usize];
    for k in 1..=rings {
        starts.push(polar.len());
        let n = 6 * k;
        for i in 0..n {
            polar.push((k as f64 / rings as f64, TAU * i as f64 / n as f64));
        }
    }
    let mut f = Vec::new();
    for i in 0..6 {
        f.push([0, starts[1] + i, starts[1] + (i + 1) % 6]);
    }
    for k in 1..rings {
        let (na, nb) = (6 * k, 6 * (k + 1));
        let (sa, sb) = (starts[k], starts[k + 1]);
        let (mut i, mut j) = (0usize, 0usize);
        while i < na || j < nb {
            let next_a = (i + 1) as f64 / na as f64;
            let next_b = (j + 1) as f64 / nb as f64;
            let ai = sa + i % na;
            let bj = sb + j % nb;
            if j >= nb || (i < na && next_a <= next_b) {
                f.push([ai, bj, sa + (i + 1) % na]);
                i += 1;
            } else {
                f.push([ai, bj, sb + (j + 1) % nb]);
                j += 1;
            }
        }
    }
    (polar, f)
}

/// Flat circular disk of the given radius with `rings` vertex rings.
pub fn disk(rings: usize, radius: f64) -> TriMesh {
    let (polar, f) = ring_disk(rings);
    let v = polar
        .iter()
        .map(|&(r, a)| Vec3::new(radius * r * a.cos(), radius * r * a.sin(), 0.0))
        .collect();
    make(v, f)
}

/// Spherical cap of polar angle `theta_max` around +z, sampled
/// equidistantly in geodesic radius.
pub fn spherical_cap(rings: usize, radius: f64, theta_max: f64) -> TriMesh {
    let (polar, f) = ring_disk(rings);
    let v = polar
        .iter()
        .map(|&(r, a)| {
            let t = r * theta_max;
            Vec3::new(
                radius * t.sin() * a.cos(),
                radius * t.sin() * a.sin(),
                radius * t.cos(),
            )
        })
        .collect();
    make(v, f)
}

/// Flat annulus in the xy-plane.
pub fn annulus(n_around: usize, n_radial: usize, r_in: f64, r_out: f64) -> TriMesh {
    let mut v = Vec::new();
    for k in 0..=n_radial {
        let r = r_in + (r_out - r_in) * k as f64 / n_radial as f64;
        for i in 0..n_around {
            let a = TAU * i as f64 / n_around as f64;
            v.push(Vec3::new(r * a.cos(), r * a.sin(), 0.0));
        }
    }
    let id = |i: usize, k: usize| k * n_around + i % n_around;
    let mut f = Vec::new();
    for k in 0..n_radial {
        for i in 0..n_around {
            let (a0, a1, b0, b1) = (id(i, k), id(i + 1, k), id(i, k + 1), id(i + 1, k + 1));
            f.push([a0, b0, b1]);
            f.push([a0, b1, a1]);
        }
    }
    make(v, f)
}

fn tube_vertices(
    n_around: usize,
    n_along: usize,
    height: f64,
    radius: &dyn Fn(f64) -> f64,
    closed: bool,
) -> Vec<Vec3> {
    let cols = if closed { n_around } else { n_around + 1 };
    let mut v = Vec::with_capacity(cols * (n_along + 1));
    for j in 0..=n_along {
        let t = j as f64 / n_along as f64;
        let r = radius(t);
        for i in 0..cols {
            let a = TAU * i as f64 / n_around as f64;
            v.push(Vec3::new(r * a.sin(), height * t, r * a.cos()));
        }
    }
    v
}

fn tube_faces(n_around: usize, n_along: usize, closed: bool) -> Vec<[usize; 3]> {
    let cols = if closed { n_around } else { n_around + 1 };
    let id = |i: usize, j: usize| j * cols + if closed { i % n_around } else { i };
    let mut f = Vec::with_capacity(2 * n_around * n_along);
    for j in 0..n_along {
        for i in 0..n_around {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            if 2 * i < n_around {
                f.push([a, b, c]);
                f.push([a, c, d]);
            } else {
                f.push([a, b, d]);
                f.push([b, c, d]);
            }
        }
    }
    f
}

/// Open tube along +y from y = 0 to `height`, radius given as a function of
/// the normalized height t in [0, 1]. Mirror-symmetric about x = 0 for even
/// `n_around`.
pub fn tube(n_around: usize, n_along: usize, height: f64, radius: impl Fn(f64) -> f64) -> TriMesh {
    make(
        tube_vertices(n_around, n_along, height, &radius, true),
        tube_faces(n_around, n_along, true),
    )
}

/// Cylinder cut open along the generator at angle 0 (seam vertices are
/// duplicated), so it is a topological disk.
pub fn cut_cylinder(n_around: usize, n_along: usize, radius: f64, height: f64) -> TriMesh {
    make(
        tube_vertices(n_around, n_along, height, &|_| radius, false),
        tube_faces(n_around, n_along, false),
    )
}

/// Truncated cone open at both ends: radius `r_bottom` at y = 0 narrowing to
/// `r_top` at y = `height`.
pub fn cone_skirt(n_around: usize, n_along: usize, height: f64, r_top: f64, r_bottom: f64) -> TriMesh {
    tube(n_around, n_along, height, move |t| r_bottom + (r_top - r_bottom) * t)
}

/// Torso-like tube: waist narrower than chest and hips.
pub fn torso(n_around: usize, n_along: usize, height: f64, radius: f64) -> TriMesh {
    tube(n_around, n_along, height, move |t| {
        radius * (1.0 - 0.18 * (PI * t).sin().powi(2)) * (1.0 + 0.1 * t)
    })
}

/// Sphere from a subdivided octahedron; symmetric about all three
/// coordinate planes.
pub fn octasphere(n: usize, radius: f64) -> TriMesh {
    let mut index: HashMap<(i64, i64, i64), usize> = HashMap::new();
    let mut v = Vec::new();
    let mut f = Vec::new();
    let n_i = n as i64;
    for oct in 0..8 {
        let s = [
            if oct & 1 == 0 { 1 } else { -1 },
            if oct & 2 == 0 { 1 } else { -1 },
            if oct & 4 == 0 { 1 } else { -1 },
        ];
        let mut id = |a: i64, b: i64| -> usize {
            let key = (s[0] * (n_i - a - b), s[1] * a, s[2] * b);
            *index.entry(key).or_insert_with(|| {
                let p = Vec3::new(key.0 as f64, key.1 as f64, key.2 as f64);
                v.push(p.normalize() * radius);
                v.len() - 1
            })
        };
        let flip = s[0] * s[1] * s[2] < 0;
        let mut push = |t: [usize; 3]| {
            f.push(if flip { [t[0], t[2], t[1]] } else { t });
        };
        for a in 0..n_i {
            for b in 0..(n_i - a) {
                push([id(a, b), id(a + 1, b), id(a, b + 1)]);
                if a + b < n_i - 1 {
                    push([id(a + 1, b), id(a + 1, b + 1), id(a, b + 1)]);
                }
            }
        }
    }
    make(v, f)
}

pub fn torus(n_major: usize, n_minor: usize, major: f64, minor: f64) -> TriMesh {
    let mut v = Vec::with_capacity(n_major * n_minor);
    for j in 0..n_minor {
        let b = TAU * j as f64 / n_minor as f64;
        for i in 0..n_major {
            let a = TAU * i as f64 / n_major as f64;
            let r = major + minor * b.cos();
            v.push(Vec3::new(r * a.cos(), r * a.sin(), minor * b.sin()));
        }
    }
    let id = |i: usize, j: usize| (j % n_minor) * n_major + i % n_major;
    let mut f = Vec::new();
    for j in 0..n_minor {
        for i in 0..n_major {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            f.push([a, b, c]);
            f.push([a, c, d]);
        }
    }
    make(v, f)
}

/// Bends the part of a +y axis tube between `y0` and `y1` into a circular
/// arc of `angle` radians (towards +x), carrying the rest rigidly. Cross
/// sections stay planar, so the inner side is compressed and the outer side
/// stretched, as a knee or elbow does to tight clothing.
pub fn bend_positions(points: &[Vec3], y0: f64, y1: f64, angle: f64) -> Vec<Vec3> {
    if angle.abs() < 1e-12 {
        return points.to_vec();
    }
    let rho = (y1 - y0) / angle;
    // circle centre on the +x side; radial coordinate for a point is rho - x
    points
        .iter()
        .map(|p| {
            if p.y <= y0 {
                return *p;
            }
            let (phi, along) = if p.y <= y1 {
                ((p.y - y0) / rho, 0.0)
            } else {
                (angle, p.y - y1)
            };
            let radial = Vec3::new(-phi.cos(), phi.sin(), 0.0);
            let tangent = Vec3::new(phi.sin(), phi.cos(), 0.0);
            let centre = Vec3::new(rho, y0, 0.0);
            centre + radial * (rho - p.x) + tangent * along + Vec3::new(0.0, 0.0, p.z)
        })
        .collect()
}
