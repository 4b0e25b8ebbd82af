use std::ops::{Add, Mul, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Rotation by +90 degrees.
    pub fn perp(self) -> Point {
        Point::new(-self.y, self.x)
    }

    pub fn lerp(self, o: Point, t: f64) -> Point {
        Point::new(self.x + t * (o.x - self.x), self.y + t * (o.y - self.y))
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

/// Symmetric 2×2 tensor `[[xx, xy], [xy, yy]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tensor2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Tensor2 {
    pub const IDENTITY: Tensor2 = Tensor2 { xx: 1.0, xy: 0.0, yy: 1.0 };

    pub const fn new(xx: f64, xy: f64, yy: f64) -> Self {
        Tensor2 { xx, xy, yy }
    }

    pub const fn diag(xx: f64, yy: f64) -> Self {
        Tensor2 { xx, xy: 0.0, yy }
    }

    pub fn scaled(self, s: f64) -> Self {
        Tensor2::new(self.xx * s, self.xy * s, self.yy * s)
    }

    pub fn apply(self, v: Point) -> Point {
        Point::new(self.xx * v.x + self.xy * v.y, self.xy * v.x + self.yy * v.y)
    }

    pub fn det(self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(self) -> (f64, f64) {
        let mean = 0.5 * (self.xx + self.yy);
        let r = (0.5 * (self.xx - self.yy)).hypot(self.xy);
        (mean - r, mean + r)
    }

    pub fn is_spd(self) -> bool {
        self.eigenvalues().0 > 0.0 && self.xx.is_finite() && self.yy.is_finite() && self.xy.is_finite()
    }
}

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub const fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Rect { x0, x1, y0, y1 }
    }

    pub const fn unit() -> Self {
        Rect::new(0.0, 1.0, 0.0, 1.0)
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }
}
