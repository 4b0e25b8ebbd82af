//! Elliptic model problems `-div(α ∇u) = f` with Dirichlet data.
//!
//! Coefficients may jump across mesh-aligned interfaces. Every evaluator
//! therefore receives the [`Cell`] it is evaluated from, and piecewise data
//! select their branch from the cell centroid rather than from the point
//! itself. On an interface edge each adjacent triangle sees its own trace.

use std::f64::consts::PI;

use crate::geom::{Point, Rect, Tensor2};
use crate::mesh::BoundarySide;

/// The triangle an evaluation belongs to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub centroid: Point,
}

impl Cell {
    /// A cell hint located at `p`, for evaluations not tied to a triangle.
    pub fn at(p: Point) -> Cell {
        Cell { index: usize::MAX, centroid: p }
    }
}

/// Boundary treatment of one side of the rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    /// `u = g`.
    Dirichlet,
    /// Zero normal flux, imposed on the flux unknowns.
    NoFlow,
}

pub trait DiffusionProblem: Sync {
    fn name(&self) -> String;
    fn domain(&self) -> Rect;
    fn alpha(&self, x: Point, cell: Cell) -> Tensor2;
    fn source(&self, x: Point, cell: Cell) -> f64;
    fn dirichlet(&self, x: Point) -> f64;

    fn boundary_kind(&self, _side: BoundarySide) -> BoundaryKind {
        BoundaryKind::Dirichlet
    }

    fn exact(&self, _x: Point, _cell: Cell) -> Option<f64> {
        None
    }

    fn exact_grad(&self, _x: Point, _cell: Cell) -> Option<Point> {
        None
    }

    fn has_exact(&self) -> bool {
        false
    }

    /// Exact edge flux `q = -α ∇u · n` seen from `cell`.
    fn exact_flux(&self, x: Point, n: Point, cell: Cell) -> Option<f64> {
        self.exact_grad(x, cell).map(|g| -self.alpha(x, cell).apply(g).dot(n))
    }
}

/// Which domain test case 2 is posed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Case2Domain {
    /// `(-1, 1)²`, where the coefficient is only Hölder continuous.
    Full,
    /// `(0.1, 1)²`, where it is smooth.
    Shifted,
}

/// Per-quadrant data of test case 4: `(α^x, α^y, amplitude)`.
pub const CASE4_PARAMS: [(f64, f64, f64); 4] = [
    (100.0, 10.0, 0.1),
    (1.0, 0.1, 10.0),
    (1000.0, 100.0, 0.01),
    (0.1, 0.01, 100.0),
];

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Smooth,
    Holder(Case2Domain),
    Interface,
    Quadrants,
}

/// One of the four manufactured problems with known exact solutions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedProblem {
    kind: Kind,
}

/// `u = cos(πx) cos(πy)` on the unit square with `α = I`.
pub fn test_case_1() -> ManufacturedProblem {
    ManufacturedProblem { kind: Kind::Smooth }
}

/// `u = cos(πx) cos(πy)` with the Hölder-continuous tensor
/// `[[1+|x|, ½|x|^⅓|y|^⅓], [·, 1+|y|]]`.
pub fn test_case_2(domain: Case2Domain) -> ManufacturedProblem {
    ManufacturedProblem { kind: Kind::Holder(domain) }
}

/// Piecewise quadratic solution with a coefficient jump at `x = 1/2`.
pub fn test_case_3() -> ManufacturedProblem {
    ManufacturedProblem { kind: Kind::Interface }
}

/// `u = a_i sin(2πx) sin(2πy)` on `(-1, 1)²` with a diagonal coefficient
/// that is constant on each quadrant.
pub fn test_case_4() -> ManufacturedProblem {
    ManufacturedProblem { kind: Kind::Quadrants }
}

/// Looks up a problem by its numeric id (1-4).
pub fn test_case(id: usize, domain: Case2Domain) -> Option<ManufacturedProblem> {
    match id {
        1 => Some(test_case_1()),
        2 => Some(test_case_2(domain)),
        3 => Some(test_case_3()),
        4 => Some(test_case_4()),
        _ => None,
    }
}

/// Quadrant index into [`CASE4_PARAMS`]: 0 = (-,-), 1 = (+,-), 2 = (+,+), 3 = (-,+).
pub fn case4_quadrant(p: Point) -> usize {
    match (p.x >= 0.0, p.y >= 0.0) {
        (false, false) => 0,
        (true, false) => 1,
        (true, true) => 2,
        (false, true) => 3,
    }
}

fn interface_left(p: Point) -> bool {
    p.x < 0.5
}

fn holder_terms(x: f64, y: f64) -> (f64, f64, f64) {
    let (ax, ay) = (x.abs(), y.abs());
    (1.0 + ax, 0.5 * ax.cbrt() * ay.cbrt(), 1.0 + ay)
}

impl ManufacturedProblem {
    pub fn id(&self) -> usize {
        match self.kind {
            Kind::Smooth => 1,
            Kind::Holder(_) => 2,
            Kind::Interface => 3,
            Kind::Quadrants => 4,
        }
    }
}

impl DiffusionProblem for ManufacturedProblem {
    fn name(&self) -> String {
        match self.kind {
            Kind::Holder(Case2Domain::Shifted) => "case2-shifted".into(),
            _ => format!("case{}", self.id()),
        }
    }

    fn domain(&self) -> Rect {
        match self.kind {
            Kind::Smooth | Kind::Interface => Rect::unit(),
            Kind::Holder(Case2Domain::Full) | Kind::Quadrants => Rect::new(-1.0, 1.0, -1.0, 1.0),
            Kind::Holder(Case2Domain::Shifted) => Rect::new(0.1, 1.0, 0.1, 1.0),
        }
    }

    fn alpha(&self, x: Point, cell: Cell) -> Tensor2 {
        match self.kind {
            Kind::Smooth => Tensor2::IDENTITY,
            Kind::Holder(_) => {
                let (a, c, b) = holder_terms(x.x, x.y);
                Tensor2::new(a, c, b)
            }
            Kind::Interface => {
                if interface_left(cell.centroid) {
                    Tensor2::IDENTITY
                } else {
                    Tensor2::new(10.0, 3.0, 1.0)
                }
            }
            Kind::Quadrants => {
                let (ax, ay, _) = CASE4_PARAMS[case4_quadrant(cell.centroid)];
                Tensor2::diag(ax, ay)
            }
        }
    }

    fn source(&self, p: Point, cell: Cell) -> f64 {
        let (x, y) = (p.x, p.y);
        match self.kind {
            Kind::Smooth => 2.0 * PI * PI * (PI * x).cos() * (PI * y).cos(),
            Kind::Holder(_) => {
                let (sx, cx) = (PI * x).sin_cos();
                let (sy, cy) = (PI * y).sin_cos();
                let u = cx * cy;
                let ux = -PI * sx * cy;
                let uy = -PI * cx * sy;
                let uxx = -PI * PI * u;
                let uyy = -PI * PI * u;
                let uxy = PI * PI * sx * sy;
                let (a, c, b) = holder_terms(x, y);
                let (ax, ay) = (x.abs(), y.abs());
                let a_x = x.signum();
                let b_y = y.signum();
                // d/dx (½|x|^⅓|y|^⅓) = (1/6)|x|^(-2/3) sgn(x) |y|^⅓
                let c_x = ax.cbrt() / ax * x.signum() * ay.cbrt() / 6.0;
                let c_y = ay.cbrt() / ay * y.signum() * ax.cbrt() / 6.0;
                let div = a_x * ux + a * uxx + c_x * uy + 2.0 * c * uxy + c_y * ux + b_y * uy + b * uyy;
                -div
            }
            Kind::Interface => {
                if interface_left(cell.centroid) {
                    4.0
                } else {
                    -5.6
                }
            }
            Kind::Quadrants => {
                let (ax, ay, amp) = CASE4_PARAMS[case4_quadrant(cell.centroid)];
                amp * (ax + ay) * 4.0 * PI * PI * (2.0 * PI * x).sin() * (2.0 * PI * y).sin()
            }
        }
    }

    fn dirichlet(&self, x: Point) -> f64 {
        self.exact(x, Cell::at(x)).unwrap_or(0.0)
    }

    fn has_exact(&self) -> bool {
        true
    }

    fn exact(&self, p: Point, cell: Cell) -> Option<f64> {
        let (x, y) = (p.x, p.y);
        Some(match self.kind {
            Kind::Smooth | Kind::Holder(_) => (PI * x).cos() * (PI * y).cos(),
            Kind::Interface => {
                if interface_left(cell.centroid) {
                    1.0 - 2.0 * y * y + 4.0 * x * y + 6.0 * x + 2.0 * y
                } else {
                    -2.0 * y * y + 1.6 * x * y - 0.6 * x + 3.2 * y + 4.3
                }
            }
            Kind::Quadrants => {
                let (_, _, amp) = CASE4_PARAMS[case4_quadrant(cell.centroid)];
                amp * (2.0 * PI * x).sin() * (2.0 * PI * y).sin()
            }
        })
    }

    fn exact_grad(&self, p: Point, cell: Cell) -> Option<Point> {
        let (x, y) = (p.x, p.y);
        Some(match self.kind {
            Kind::Smooth | Kind::Holder(_) => {
                let (sx, cx) = (PI * x).sin_cos();
                let (sy, cy) = (PI * y).sin_cos();
                Point::new(-PI * sx * cy, -PI * cx * sy)
            }
            Kind::Interface => {
                if interface_left(cell.centroid) {
                    Point::new(4.0 * y + 6.0, -4.0 * y + 4.0 * x + 2.0)
                } else {
                    Point::new(1.6 * y - 0.6, -4.0 * y + 1.6 * x + 3.2)
                }
            }
            Kind::Quadrants => {
                let (_, _, amp) = CASE4_PARAMS[case4_quadrant(cell.centroid)];
                let (sx, cx) = (2.0 * PI * x).sin_cos();
                let (sy, cy) = (2.0 * PI * y).sin_cos();
                Point::new(amp * 2.0 * PI * cx * sy, amp * 2.0 * PI * sx * cy)
            }
        })
    }
}

type ScalarFn = Box<dyn Fn(Point) -> f64 + Send + Sync>;
type VectorFn = Box<dyn Fn(Point) -> Point + Send + Sync>;

/// A problem assembled from closures, with a constant coefficient tensor.
pub struct FnProblem {
    pub domain: Rect,
    pub alpha: Tensor2,
    pub source: ScalarFn,
    pub boundary: ScalarFn,
    /// Exact solution and its gradient, when known.
    pub exact: Option<(ScalarFn, VectorFn)>,
}

impl FnProblem {
    /// `f = 0`, `g = 0` on `domain` with `α = I`.
    pub fn homogeneous(domain: Rect) -> Self {
        FnProblem {
            domain,
            alpha: Tensor2::IDENTITY,
            source: Box::new(|_| 0.0),
            boundary: Box::new(|_| 0.0),
            exact: Some((Box::new(|_| 0.0), Box::new(|_| Point::default()))),
        }
    }

    /// Harmonic problem with affine data `u = c0 + cx·x + cy·y`.
    pub fn affine(domain: Rect, alpha: Tensor2, c0: f64, cx: f64, cy: f64) -> Self {
        let u = move |p: Point| c0 + cx * p.x + cy * p.y;
        FnProblem {
            domain,
            alpha,
            source: Box::new(|_| 0.0),
            boundary: Box::new(u),
            exact: Some((Box::new(u), Box::new(move |_| Point::new(cx, cy)))),
        }
    }
}

impl DiffusionProblem for FnProblem {
    fn name(&self) -> String {
        "custom".into()
    }

    fn domain(&self) -> Rect {
        self.domain
    }

    fn alpha(&self, _x: Point, _cell: Cell) -> Tensor2 {
        self.alpha
    }

    fn source(&self, x: Point, _cell: Cell) -> f64 {
        (self.source)(x)
    }

    fn dirichlet(&self, x: Point) -> f64 {
        (self.boundary)(x)
    }

    fn has_exact(&self) -> bool {
        self.exact.is_some()
    }

    fn exact(&self, x: Point, _cell: Cell) -> Option<f64> {
        self.exact.as_ref().map(|(u, _)| u(x))
    }

    fn exact_grad(&self, x: Point, _cell: Cell) -> Option<Point> {
        self.exact.as_ref().map(|(_, g)| g(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// `-div(α ∇u)` by central differences of the exact flux.
    fn fd_source(p: &dyn DiffusionProblem, x: Point, h: f64) -> f64 {
        let cell = Cell::at(x);
        let flux = |q: Point| p.alpha(q, cell).apply(p.exact_grad(q, cell).unwrap());
        let dx = (flux(Point::new(x.x + h, x.y)).x - flux(Point::new(x.x - h, x.y)).x) / (2.0 * h);
        let dy = (flux(Point::new(x.x, x.y + h)).y - flux(Point::new(x.x, x.y - h)).y) / (2.0 * h);
        -(dx + dy)
    }

    /// Gradient by central differences of the exact solution.
    fn fd_grad(p: &dyn DiffusionProblem, x: Point, h: f64) -> Point {
        let cell = Cell::at(x);
        let u = |q: Point| p.exact(q, cell).unwrap();
        Point::new(
            (u(Point::new(x.x + h, x.y)) - u(Point::new(x.x - h, x.y))) / (2.0 * h),
            (u(Point::new(x.x, x.y + h)) - u(Point::new(x.x, x.y - h))) / (2.0 * h),
        )
    }

    #[test]
    fn case1_values() {
        let p = test_case_1();
        let o = Point::new(0.0, 0.0);
        assert!((p.source(o, Cell::at(o)) - 2.0 * PI * PI).abs() < 1e-12);
        for y in [0.0, 0.3, 0.77, 1.0] {
            let q = Point::new(0.5, y);
            assert!(p.exact(q, Cell::at(q)).unwrap().abs() < 1e-15);
        }
        let xi = Point::new(0.3, -2.0);
        assert_eq!(p.alpha(o, Cell::at(o)).apply(xi), xi);
    }

    #[test]
    fn case2_tensor() {
        let p = test_case_2(Case2Domain::Full);
        let x = Point::new(0.5, 0.5);
        let a = p.alpha(x, Cell::at(x));
        let off = 0.5 * 0.5f64.powf(2.0 / 3.0);
        assert!((a.xx - 1.5).abs() < 1e-15 && (a.yy - 1.5).abs() < 1e-15);
        assert!((a.xy - off).abs() < 1e-15);
        assert!(a.det() > 0.0 && a.is_spd());
        let o = Point::new(0.0, 0.0);
        assert_eq!(p.alpha(o, Cell::at(o)), Tensor2::IDENTITY);
    }

    #[test]
    fn case2_source_matches_finite_differences() {
        for dom in [Case2Domain::Full, Case2Domain::Shifted] {
            let p = test_case_2(dom);
            for x in [Point::new(0.3, 0.7), Point::new(-0.4, 0.2), Point::new(-0.6, -0.8), Point::new(0.9, -0.15)] {
                let exact = p.source(x, Cell::at(x));
                let fd = fd_source(&p, x, 1e-5);
                assert!((exact - fd).abs() <= 1e-4 * exact.abs().max(1.0), "{x:?}: {exact} vs {fd}");
            }
        }
    }

    #[test]
    fn case3_interface() {
        let p = test_case_3();
        let left = Cell::at(Point::new(0.25, 0.5));
        let right = Cell::at(Point::new(0.75, 0.5));
        for y in [0.0, 0.2, 0.5, 0.9] {
            let x = Point::new(0.5, y);
            let ul = p.exact(x, left).unwrap();
            let ur = p.exact(x, right).unwrap();
            let want = 4.0 + 4.0 * y - 2.0 * y * y;
            assert!((ul - want).abs() < 1e-13 && (ur - want).abs() < 1e-13);
            let fl = p.alpha(x, left).apply(p.exact_grad(x, left).unwrap()).x;
            let fr = p.alpha(x, right).apply(p.exact_grad(x, right).unwrap()).x;
            assert!((fl - (4.0 * y + 6.0)).abs() < 1e-13);
            assert!((fr - (4.0 * y + 6.0)).abs() < 1e-13);
        }
        let q = Point::new(0.25, 0.4);
        assert_eq!(p.source(q, Cell::at(q)), 4.0);
        for x in [Point::new(0.2, 0.3), Point::new(0.8, 0.6)] {
            let fd = fd_source(&p, x, 1e-4);
            assert!((p.source(x, Cell::at(x)) - fd).abs() < 1e-6);
            let g = fd_grad(&p, x, 1e-5);
            assert!((g - p.exact_grad(x, Cell::at(x)).unwrap()).norm() < 1e-8);
        }
    }

    #[test]
    fn case4_quadrants() {
        let p = test_case_4();
        let q3 = CASE4_PARAMS[2];
        assert_eq!(q3, (1000.0, 100.0, 0.01));
        for y in [-0.7, 0.0, 0.4] {
            let x = Point::new(0.0, y);
            assert!(p.exact(x, Cell::at(x)).unwrap().abs() < 1e-15);
        }
        // Normal-flux continuity: α^x·a and α^y·a agree across all quadrants.
        for (ax, ay, a) in CASE4_PARAMS {
            assert!((ax * a - 10.0).abs() < 1e-12 && (ay * a - 1.0).abs() < 1e-12);
        }
        let x = Point::new(0.25, -0.25);
        let (ax, ay, amp) = CASE4_PARAMS[1];
        assert_eq!((ax, ay, amp), (1.0, 0.1, 10.0));
        let u_factor = (2.0 * PI * x.x).sin() * (2.0 * PI * x.y).sin();
        let ratio = p.source(x, Cell::at(x)) / u_factor;
        assert!((ratio - 1.1 * 4.0 * PI * PI * 10.0).abs() < 1e-9);
        for x in [Point::new(0.3, 0.2), Point::new(-0.6, 0.45), Point::new(-0.1, -0.85), Point::new(0.7, -0.3)] {
            let fd = fd_source(&p, x, 1e-5);
            let exact = p.source(x, Cell::at(x));
            assert!((exact - fd).abs() <= 1e-5 * exact.abs().max(1.0));
        }
    }

    #[test]
    fn coefficients_are_spd_everywhere() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let probs: [&dyn DiffusionProblem; 5] = [
            &test_case_1(),
            &test_case_2(Case2Domain::Full),
            &test_case_2(Case2Domain::Shifted),
            &test_case_3(),
            &test_case_4(),
        ];
        for p in probs {
            let d = p.domain();
            for _ in 0..10_000 {
                let x = Point::new(rng.random_range(d.x0..d.x1), rng.random_range(d.y0..d.y1));
                assert!(p.alpha(x, Cell::at(x)).eigenvalues().0 > 0.0);
            }
        }
    }
}
