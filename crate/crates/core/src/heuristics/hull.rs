//! Convex hull measures for the polygon-spreading policies.

pub type Point = (f64, f64);

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Counter-clockwise hull vertices (Andrew's monotone chain), collinear points dropped.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut p = points.to_vec();
    p.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let chain = |pts: &mut dyn Iterator<Item = &Point>| {
        let mut out: Vec<Point> = Vec::new();
        for &pt in pts {
            while out.len() >= 2 && cross(out[out.len() - 2], out[out.len() - 1], pt) <= 0.0 {
                out.pop();
            }
            out.push(pt);
        }
        out.pop();
        out
    };
    let mut hull = chain(&mut p.iter());
    hull.extend(chain(&mut p.iter().rev()));
    hull
}

/// Perimeter of the convex hull. Two points give twice their distance.
pub fn hull_perimeter(points: &[Point]) -> f64 {
    let h = convex_hull(points);
    if h.len() < 2 {
        return 0.0;
    }
    h.iter()
        .zip(h.iter().cycle().skip(1))
        .map(|(a, b)| (a.0 - b.0).hypot(a.1 - b.1))
        .sum()
}

pub fn hull_area(points: &[Point]) -> f64 {
    let h = convex_hull(points);
    if h.len() < 3 {
        return 0.0;
    }
    let twice: f64 = h
        .iter()
        .zip(h.iter().cycle().skip(1))
        .map(|(a, b)| a.0 * b.1 - b.0 * a.1)
        .sum();
    0.5 * twice.abs()
}
