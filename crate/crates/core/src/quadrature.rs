//! Gauss-Legendre rules on intervals and collapsed (Duffy) product rules
//! on the reference triangle `{(ξ, η): ξ, η ≥ 0, ξ + η ≤ 1}`.

/// `n`-point Gauss-Legendre rule on `[-1, 1]`, exact for degree `2n - 1`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one point");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            // Chebyshev-like initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    /// Smallest rule exact for polynomials of the given degree.
    pub fn with_degree(degree: usize) -> Self {
        GaussLegendre::new(degree / 2 + 1)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Points and weights mapped to `[0, 1]` (weights sum to 1).
    pub fn unit_points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| (0.5 * (x + 1.0), 0.5 * w))
    }
}

/// Legendre polynomial `P_n(x)` and its derivative by the three-term recurrence.
pub fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Quadrature rule on the reference triangle; weights sum to 1/2.
#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl TriangleRule {
    /// Collapsed Gauss product rule exact for total degree `degree`.
    ///
    /// The map `(u, v) ↦ (u, (1 - u) v)` adds one power of `u` through its
    /// Jacobian, so `⌈(degree + 2) / 2⌉` points per direction suffice.
    pub fn with_degree(degree: usize) -> Self {
        let n = (degree + 2).div_ceil(2).max(1);
        let g = GaussLegendre::new(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for (u, wu) in g.unit_points() {
            for (v, wv) in g.unit_points() {
                points.push([u, (1.0 - u) * v]);
                weights.push(wu * wv * (1.0 - u));
            }
        }
        TriangleRule { points, weights, degree }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}
