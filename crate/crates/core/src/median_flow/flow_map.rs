//! The horizon-`k` map `x ↦ F^{T_k}_{T_k}(x)` kept as an exact piecewise-affine
//! function, so extending the forward path by one increment costs `O(log k)`.
//!
//! With `φ_e(x) = x + (1 + |x|)e`, the map for the first `k` forward increments
//! is `Φ_k = φ_{−ΔB_0} ∘ … ∘ φ_{−ΔB_{k−1}}`, hence `Φ_{k+1} = Φ_k ∘ φ_{−ΔB_k}`.
//! Breakpoints of `Φ_k` are pulled back through `φ_e`, which is affine on each
//! side of `e`, and `0` becomes a new breakpoint. Breakpoints live in a treap
//! whose positions carry lazy affine updates.

use super::flow::{flow_step, OVERFLOW_GUARD};
use crate::error::{Error, Result};
use crate::rng::splitmix64;

const NIL: u32 = u32::MAX;

#[derive(Debug, Clone)]
struct Node {
    pos: f64,
    val: f64,
    prio: u64,
    left: u32,
    right: u32,
    // Pending `pos ↦ mul·pos + add` for both subtrees.
    mul: f64,
    add: f64,
}

#[derive(Debug, Clone)]
pub struct FlowMap {
    nodes: Vec<Node>,
    root: u32,
    slope_left: f64,
    slope_right: f64,
    steps: usize,
    prio_state: u64,
}

impl Default for FlowMap {
    fn default() -> Self {
        Self::identity()
    }
}

impl FlowMap {
    /// `Φ_0 = id`.
    pub fn identity() -> Self {
        let mut m = Self {
            nodes: Vec::new(),
            root: NIL,
            slope_left: 1.0,
            slope_right: 1.0,
            steps: 0,
            prio_state: 0x5eed,
        };
        m.root = m.new_node(0.0, 0.0);
        m
    }

    /// Map of the reversed driver built from `forward` increments.
    pub fn from_forward(forward: &[f64]) -> Result<Self> {
        let mut m = Self::identity();
        for &d in forward {
            m.push_forward(d)?;
        }
        Ok(m)
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn breakpoints(&self) -> usize {
        self.nodes.len()
    }

    /// Extends the horizon by the forward increment `db`.
    pub fn push_forward(&mut self, db: f64) -> Result<()> {
        let e = -db;
        if !(e.abs() < 1.0) {
            return Err(Error::param(
                "increment",
                format!("|ΔB| must be < 1, got {db}"),
            ));
        }
        let at_e = self.eval(e);
        if !(at_e.abs() <= OVERFLOW_GUARD) {
            return Err(Error::Numerical(format!("flow overflow: |F| = {at_e:e}")));
        }
        let (l, r) = self.split(self.root, e);
        let knot_at_e = r != NIL && self.min_pos(r) == e;
        // Preimages under φ_e: (b − e)/(1 − e) left of e, (b − e)/(1 + e) right of it.
        let (ml, mr) = (1.0 / (1.0 - e), 1.0 / (1.0 + e));
        self.apply(l, ml, -e * ml);
        self.apply(r, mr, -e * mr);
        let mut root = self.merge(l, r);
        if !knot_at_e {
            let (l, r) = self.split(root, 0.0);
            let n = self.new_node(0.0, at_e);
            let ln = self.merge(l, n);
            root = self.merge(ln, r);
        }
        self.root = root;
        self.slope_left *= 1.0 - e;
        self.slope_right *= 1.0 + e;
        self.steps += 1;
        Ok(())
    }

    /// `Φ_k(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        let mut lo: Option<(f64, f64)> = None;
        let mut hi: Option<(f64, f64)> = None;
        let (mut a, mut c) = (1.0, 0.0);
        let mut k = self.root;
        while k != NIL {
            let n = &self.nodes[k as usize];
            let p = a * n.pos + c;
            let (na, nc) = (a * n.mul, a * n.add + c);
            if p <= x {
                lo = Some((p, n.val));
                if p == x {
                    return n.val;
                }
                k = n.right;
            } else {
                hi = Some((p, n.val));
                k = n.left;
            }
            a = na;
            c = nc;
        }
        match (lo, hi) {
            (Some((p0, v0)), Some((p1, v1))) => v0 + (v1 - v0) * ((x - p0) / (p1 - p0)),
            (Some((p0, v0)), None) => v0 + self.slope_right * (x - p0),
            (None, Some((p1, v1))) => v1 + self.slope_left * (x - p1),
            (None, None) => unreachable!("the map always has a breakpoint"),
        }
    }

    fn new_node(&mut self, pos: f64, val: f64) -> u32 {
        self.prio_state = splitmix64(self.prio_state);
        self.nodes.push(Node {
            pos,
            val,
            prio: self.prio_state,
            left: NIL,
            right: NIL,
            mul: 1.0,
            add: 0.0,
        });
        (self.nodes.len() - 1) as u32
    }

    fn apply(&mut self, k: u32, mul: f64, add: f64) {
        if k == NIL {
            return;
        }
        let n = &mut self.nodes[k as usize];
        n.pos = mul * n.pos + add;
        n.add = mul * n.add + add;
        n.mul *= mul;
    }

    fn push_down(&mut self, k: u32) {
        let n = &self.nodes[k as usize];
        if n.mul == 1.0 && n.add == 0.0 {
            return;
        }
        let (l, r, m, a) = (n.left, n.right, n.mul, n.add);
        self.apply(l, m, a);
        self.apply(r, m, a);
        let n = &mut self.nodes[k as usize];
        n.mul = 1.0;
        n.add = 0.0;
    }

    /// Splits into positions `< key` and `≥ key`.
    fn split(&mut self, k: u32, key: f64) -> (u32, u32) {
        if k == NIL {
            return (NIL, NIL);
        }
        self.push_down(k);
        if self.nodes[k as usize].pos < key {
            let (l, r) = self.split(self.nodes[k as usize].right, key);
            self.nodes[k as usize].right = l;
            (k, r)
        } else {
            let (l, r) = self.split(self.nodes[k as usize].left, key);
            self.nodes[k as usize].left = r;
            (l, k)
        }
    }

    fn merge(&mut self, a: u32, b: u32) -> u32 {
        if a == NIL {
            return b;
        }
        if b == NIL {
            return a;
        }
        if self.nodes[a as usize].prio > self.nodes[b as usize].prio {
            self.push_down(a);
            let r = self.merge(self.nodes[a as usize].right, b);
            self.nodes[a as usize].right = r;
            a
        } else {
            self.push_down(b);
            let l = self.merge(a, self.nodes[b as usize].left);
            self.nodes[b as usize].left = l;
            b
        }
    }

    fn min_pos(&mut self, mut k: u32) -> f64 {
        loop {
            self.push_down(k);
            let l = self.nodes[k as usize].left;
            if l == NIL {
                return self.nodes[k as usize].pos;
            }
            k = l;
        }
    }
}

/// Brute-force `Φ_k(x)` for the first `k` forward increments.
pub fn compose_forward(forward: &[f64], x: f64) -> f64 {
    forward.iter().rev().fold(x, |acc, &d| flow_step(acc, -d))
}

#[cfg(test)]
mod tests {
    use super::super::driver::{DriverKind, ForwardPath};
    use super::super::flow::euler_f;
    use super::*;

    #[test]
    fn identity_and_one_step() {
        let mut m = FlowMap::identity();
        assert_eq!(m.eval(0.7), 0.7);
        assert_eq!(m.eval(-3.0), -3.0);
        m.push_forward(-0.1).unwrap();
        for x in [-2.0, -0.5, 0.0, 0.3, 4.0] {
            assert!((m.eval(x) - flow_step(x, 0.1)).abs() < 1e-15);
        }
    }

    #[test]
    fn matches_brute_force() {
        for (kind, seed) in [(DriverKind::Rademacher, 1), (DriverKind::Gaussian, 2)] {
            let f = ForwardPath::sample(kind, 1e-3, 3000, seed).unwrap();
            let mut m = FlowMap::identity();
            for (k, &d) in f.increments.iter().enumerate() {
                m.push_forward(d).unwrap();
                if (k + 1) % 500 == 0 {
                    let drv = f.reversed(k + 1).unwrap();
                    for x in [-3.0, -0.2, 0.0, 0.05, 1.5, 30.0] {
                        let want = euler_f(&drv, x, k + 1).unwrap().x;
                        let got = m.eval(x);
                        assert!(
                            (got - want).abs() <= 1e-9 * (1.0 + want.abs()),
                            "{k} {x}: {got} {want}"
                        );
                    }
                }
            }
            assert_eq!(m.steps(), 3000);
        }
    }

    #[test]
    fn brute_force_helper_agrees_with_euler() {
        let f = ForwardPath::sample(DriverKind::Rademacher, 1e-2, 50, 4).unwrap();
        let drv = f.reversed(50).unwrap();
        assert_eq!(
            compose_forward(&f.increments, 0.25),
            euler_f(&drv, 0.25, 50).unwrap().x
        );
    }

    #[test]
    fn zero_increments_keep_identity() {
        let m = FlowMap::from_forward(&[0.0; 20]).unwrap();
        assert_eq!(m.breakpoints(), 1);
        assert_eq!(m.eval(0.3), 0.3);
    }
}
