//! Flow instances, DIMACS input and LP builders for minimum cost maximum
//! flow and maximum concurrent flow.
//!
//! Recovering an exact integral flow by rounding needs the LP solved to an
//! accuracy of order 1/poly(|V| U_cap); [`min_cost_flow`] chooses the
//! accuracy from the instance and isolates a unique optimum with a small
//! random cost perturbation before rounding.

use super::ipm::{solve_lp, solve_lp_until, IpmConfig, LpStats};
use super::LpProblem;
use crate::error::{Error, Result};
use crate::rng::rng_from;
use nalgebra::DVector;
use rand::Rng;
use std::collections::VecDeque;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlowArc {
    pub from: usize,
    pub to: usize,
    pub low: i64,
    pub cap: i64,
    pub cost: i64,
}

/// A directed graph on vertices 0..nodes, with an optional source/sink pair
/// for min-cost flow and a list of commodities for concurrent flow.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlowInstance {
    pub nodes: usize,
    pub arcs: Vec<FlowArc>,
    pub source: Option<usize>,
    pub sink: Option<usize>,
    pub commodities: Vec<(usize, usize)>,
}

impl FlowInstance {
    pub fn new(nodes: usize) -> Self {
        FlowInstance { nodes, ..Default::default() }
    }

    pub fn arc(mut self, from: usize, to: usize, cap: i64, cost: i64) -> Self {
        self.arcs.push(FlowArc { from, to, low: 0, cap, cost });
        self
    }

    pub fn terminals(mut self, s: usize, t: usize) -> Self {
        self.source = Some(s);
        self.sink = Some(t);
        self
    }

    pub fn commodity(mut self, s: usize, t: usize) -> Self {
        self.commodities.push((s, t));
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (k, a) in self.arcs.iter().enumerate() {
            if a.from >= self.nodes || a.to >= self.nodes {
                return Err(Error::InvalidArgument(format!("arc {k} leaves the vertex set")));
            }
            if a.from == a.to {
                return Err(Error::InvalidArgument(format!("arc {k} is a loop")));
            }
            if a.cap <= 0 || a.low < 0 || a.low >= a.cap {
                return Err(Error::InvalidArgument(format!("arc {k} needs 0 <= low < cap and cap > 0")));
            }
        }
        let bad = |v: usize| v >= self.nodes;
        if self.source.is_some_and(bad) || self.sink.is_some_and(bad) {
            return Err(Error::InvalidArgument("terminal outside the vertex set".into()));
        }
        if let Some(&(s, t)) = self.commodities.iter().find(|&&(s, t)| bad(s) || bad(t) || s == t) {
            return Err(Error::InvalidArgument(format!("bad commodity ({s}, {t})")));
        }
        Ok(())
    }

    /// Vertices reachable from `from`, following arcs forwards or backwards.
    fn reach(&self, from: usize, forward: bool, parent: &mut [Option<usize>]) -> Vec<bool> {
        let mut seen = vec![false; self.nodes];
        seen[from] = true;
        let mut queue = VecDeque::from([from]);
        while let Some(v) = queue.pop_front() {
            for (k, a) in self.arcs.iter().enumerate() {
                let (x, y) = if forward { (a.from, a.to) } else { (a.to, a.from) };
                if x == v && !seen[y] {
                    seen[y] = true;
                    parent[y] = Some(k);
                    queue.push_back(y);
                }
            }
        }
        seen
    }
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// DIMACS min-cost-flow text: `p min <nodes> <arcs>`, `n <id> s|t`,
/// `a <u> <v> <low> <cap> <cost>`, comment lines `c ...`, plus `k <s> <t>`
/// lines naming commodities. Vertex ids are 1-based.
pub fn parse_dimacs(text: &str) -> Result<FlowInstance> {
    let mut inst: Option<FlowInstance> = None;
    let mut declared = 0;
    let mut last = 1;
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        last = ln;
        let tok: Vec<&str> = raw.split_whitespace().collect();
        if tok.is_empty() || tok[0] == "c" {
            continue;
        }
        let int = |s: &str| s.parse::<i64>().map_err(|_| perr(ln, format!("bad integer '{s}'")));
        if tok[0] == "p" {
            if inst.is_some() {
                return Err(perr(ln, "second problem line"));
            }
            if tok.len() != 4 || tok[1] != "min" {
                return Err(perr(ln, "expected 'p min <nodes> <arcs>'"));
            }
            let n = int(tok[2])?;
            declared = int(tok[3])?;
            if n <= 0 || declared < 0 {
                return Err(perr(ln, "sizes must be positive"));
            }
            inst = Some(FlowInstance::new(n as usize));
            continue;
        }
        let f = inst.as_mut().ok_or_else(|| perr(ln, "expected problem line first"))?;
        let node = |s: &str| -> Result<usize> {
            let v = int(s)?;
            if v < 1 || v as usize > f.nodes {
                return Err(perr(ln, format!("vertex {v} outside 1..={}", f.nodes)));
            }
            Ok(v as usize - 1)
        };
        match (tok[0], tok.len()) {
            ("n", 3) => {
                let v = node(tok[1])?;
                match tok[2] {
                    "s" => f.source = Some(v),
                    "t" => f.sink = Some(v),
                    other => return Err(perr(ln, format!("node role must be s or t, found '{other}'"))),
                }
            }
            ("a", 6) => {
                let (from, to) = (node(tok[1])?, node(tok[2])?);
                let (low, cap, cost) = (int(tok[3])?, int(tok[4])?, int(tok[5])?);
                if cap <= 0 || low < 0 || low >= cap || from == to {
                    return Err(perr(ln, "arc needs distinct ends and 0 <= low < cap"));
                }
                f.arcs.push(FlowArc { from, to, low, cap, cost });
            }
            ("k", 3) => {
                let (s, t) = (node(tok[1])?, node(tok[2])?);
                if s == t {
                    return Err(perr(ln, "commodity source equals sink"));
                }
                f.commodities.push((s, t));
            }
            _ => return Err(perr(ln, format!("unrecognised line '{}'", raw.trim()))),
        }
    }
    let f = inst.ok_or_else(|| perr(last, "missing problem line"))?;
    if f.arcs.len() as i64 != declared {
        return Err(perr(last, format!("expected {declared} arcs, found {}", f.arcs.len())));
    }
    Ok(f)
}

pub fn read_dimacs(path: impl AsRef<Path>) -> Result<FlowInstance> {
    parse_dimacs(&std::fs::read_to_string(path)?)
}

/// LP for minimum cost maximum flow and where to find each quantity in its
/// solution vector.
#[derive(Debug, Clone)]
pub struct MinCostFlowLp {
    pub lp: LpProblem,
    /// Variables 0..arcs are the instance's arcs, in order.
    pub arcs: usize,
    /// Index of the return arc t -> s, whose flow is the flow value.
    pub return_arc: usize,
    /// Cost of a unit on the return arc, -M.
    pub return_cost: f64,
    /// (tail, head) of every variable, auxiliary arcs included.
    pub ends: Vec<(usize, usize)>,
}

/// Circulation LP on the arcs plus a return arc t -> s of cost -M, with
/// M larger than the cost of any flow, so optimal circulations are min-cost
/// maximum flows. Each vertex is joined to a root by a pair of expensive
/// auxiliary arcs which absorb the imbalance of the midpoint start f = (l+u)/2;
/// they carry no flow at an optimum.
pub fn build_mincostflow_lp(f: &FlowInstance) -> Result<MinCostFlowLp> {
    build_mincost_with_costs(f, &f.arcs.iter().map(|a| a.cost as f64).collect::<Vec<_>>())
}

fn build_mincost_with_costs(f: &FlowInstance, cost: &[f64]) -> Result<MinCostFlowLp> {
    f.validate()?;
    let (s, t) = match (f.source, f.sink) {
        (Some(s), Some(t)) if s != t => (s, t),
        _ => return Err(Error::InvalidArgument("min-cost flow needs distinct source and sink".into())),
    };
    let mut parent = vec![None; f.nodes];
    if !f.reach(s, true, &mut parent)[t] {
        return Err(Error::Disconnected(format!("sink {} unreachable from source {}", t + 1, s + 1)));
    }
    let m = f.arcs.len();
    let abs_cost: f64 = f.arcs.iter().zip(cost).map(|(a, c)| c.abs() * a.cap as f64).sum();
    let big_m = abs_cost + 1.0;
    let aux_cost = big_m + abs_cost + 1.0;
    let ret_cap = f.arcs.iter().filter(|a| a.from == s).map(|a| a.cap).sum::<i64>() as f64 + 1.0;

    let mut lo = Vec::new();
    let mut hi = Vec::new();
    let mut c = Vec::new();
    let mut x = Vec::new();
    let mut ends = Vec::new();
    for (a, &ca) in f.arcs.iter().zip(cost) {
        lo.push(a.low as f64);
        hi.push(a.cap as f64);
        x.push(0.5 * (a.low + a.cap) as f64);
        c.push(ca);
        ends.push((a.from, a.to));
    }
    lo.push(0.0);
    hi.push(ret_cap);
    x.push(0.5 * ret_cap);
    c.push(-big_m);
    ends.push((t, s));

    // excess[v] = out - in under the midpoint start
    let mut excess = vec![0.0; f.nodes];
    for (k, &(u, v)) in ends.iter().enumerate() {
        excess[u] += x[k];
        excess[v] -= x[k];
    }
    let root = 0;
    for v in 0..f.nodes {
        if v == root {
            continue;
        }
        let cap = 2.0 * (excess[v].abs().ceil() + 1.0);
        // v -> root carries (cap - e)/2 and root -> v carries (cap + e)/2
        for (dir, val) in [((v, root), 0.5 * (cap - excess[v])), ((root, v), 0.5 * (cap + excess[v]))] {
            lo.push(0.0);
            hi.push(cap);
            x.push(val);
            c.push(aux_cost);
            ends.push(dir);
        }
    }
    let row = |v: usize| if v < root { v } else { v - 1 };
    let mut entries = Vec::new();
    for (k, &(u, v)) in ends.iter().enumerate() {
        if u != root {
            entries.push((row(u), k, 1.0));
        }
        if v != root {
            entries.push((row(v), k, -1.0));
        }
    }
    let n = ends.len();
    let d = f.nodes - 1;
    let lp = LpProblem::new(
        d,
        n,
        &entries,
        DVector::zeros(d),
        DVector::from_vec(c),
        DVector::from_vec(lo),
        DVector::from_vec(hi),
        DVector::from_vec(x),
    )?;
    Ok(MinCostFlowLp { lp, arcs: m, return_arc: m, return_cost: -big_m, ends })
}

#[derive(Debug, Clone)]
pub struct MinCostFlow {
    /// Integral flow on each instance arc.
    pub flow: Vec<i64>,
    pub value: i64,
    pub cost: i64,
    /// Largest distance between an LP value and its rounding.
    pub rounding_error: f64,
    pub stats: LpStats,
}

/// Rounds an LP solution to the nearest integral flow and checks it.
pub fn round_flow(f: &FlowInstance, y: &DVector<f64>) -> Result<(Vec<i64>, f64)> {
    let m = f.arcs.len();
    let flow: Vec<i64> = (0..m).map(|k| y[k].round() as i64).collect();
    let err = (0..m).map(|k| (y[k] - flow[k] as f64).abs()).fold(0.0, f64::max);
    let mut bal = vec![0i64; f.nodes];
    for (a, &v) in f.arcs.iter().zip(&flow) {
        if v < a.low || v > a.cap {
            return Err(Error::NonConvergence { estimate: err, target: 0.5 });
        }
        bal[a.from] += v;
        bal[a.to] -= v;
    }
    let (s, t) = (f.source.unwrap_or(usize::MAX), f.sink.unwrap_or(usize::MAX));
    if (0..f.nodes).any(|v| v != s && v != t && bal[v] != 0) {
        return Err(Error::NonConvergence { estimate: err, target: 0.5 });
    }
    Ok((flow, err))
}

/// Whether the nearest integral circulation to `y` is feasible and its
/// residual graph has no cycle of cost below -q/4. Distinct integral
/// circulations differ in perturbed cost by at least q, so such a
/// circulation is the LP optimum.
fn certify_rounding(lp: &MinCostFlowLp, nodes: usize, y: &DVector<f64>, q: f64) -> bool {
    let p = &lp.lp;
    let z: Vec<i64> = y.iter().map(|v| v.round() as i64).collect();
    if y.iter().zip(&z).any(|(v, &r)| (v - r as f64).abs() > 0.25) {
        return false;
    }
    let mut bal = vec![0i64; nodes];
    let mut edges = Vec::new();
    for (k, &(u, v)) in lp.ends.iter().enumerate() {
        let zk = z[k] as f64;
        if zk < p.l[k] || zk > p.u[k] {
            return false;
        }
        bal[u] += z[k];
        bal[v] -= z[k];
        if zk < p.u[k] {
            edges.push((u, v, p.c[k]));
        }
        if zk > p.l[k] {
            edges.push((v, u, -p.c[k]));
        }
    }
    if bal.iter().any(|&b| b != 0) {
        return false;
    }
    // Bellman-Ford from a virtual source counting only improvements above
    // delta. A stable labelling rules out cycles of cost below -nodes * delta.
    let delta = q / (4.0 * nodes as f64);
    let mut dist = vec![0.0f64; nodes];
    for _ in 0..2 * nodes + 2 {
        let mut changed = false;
        for &(u, v, w) in &edges {
            if dist[u] + w < dist[v] - delta {
                dist[v] = dist[u] + w;
                changed = true;
            }
        }
        if !changed {
            return true;
        }
    }
    false
}

/// Exact minimum cost maximum flow by perturbing costs, solving the LP
/// to an accuracy below the perturbation scale and rounding.
pub fn min_cost_flow(f: &FlowInstance, seed: u64, cfg: &IpmConfig) -> Result<MinCostFlow> {
    f.validate()?;
    let m = f.arcs.len().max(1) as f64;
    let total_cap: f64 = f.arcs.iter().map(|a| a.cap as f64).sum::<f64>() + 1.0;
    // perturbations of at most 1/(4 total_cap) in total never reorder
    // integral flows whose costs differ
    let range = (4.0 * m * total_cap).ceil() as u64;
    let q = 1.0 / (4.0 * range as f64 * total_cap);
    let mut rng = rng_from(seed, &[0xf10e]);
    let cost: Vec<f64> = f.arcs.iter().map(|a| a.cost as f64 + q * rng.random_range(1..=range) as f64).collect();
    let built = build_mincost_with_costs(f, &cost)?;
    let eps = q / (8.0 * total_cap);
    // Far along the path the Gram matrices of degenerate optima become
    // numerically singular, so stop as soon as the rounding is provably optimal.
    let mut certified = None;
    let sol = solve_lp_until(&built.lp, eps, cfg, &mut |y| {
        let ok = certify_rounding(&built, f.nodes, y, q);
        if ok {
            certified = Some(y.clone());
        }
        ok
    })?;
    let y = certified.unwrap_or(sol.y);
    let (flow, rounding_error) = round_flow(f, &y)?;
    let s = f.source.expect("validated");
    let value = f
        .arcs
        .iter()
        .zip(&flow)
        .map(|(a, &v)| {
            if a.from == s {
                v
            } else if a.to == s {
                -v
            } else {
                0
            }
        })
        .sum();
    let cost = f.arcs.iter().zip(&flow).map(|(a, &v)| a.cost * v).sum();
    Ok(MinCostFlow { flow, value, cost, rounding_error, stats: sol.stats })
}

/// LP for maximum concurrent flow and the layout of its variables.
#[derive(Debug, Clone)]
pub struct ConcurrentFlowLp {
    pub lp: LpProblem,
    /// For each commodity, (arc index, variable index) of its kept arcs.
    pub commodity_vars: Vec<Vec<(usize, usize)>>,
    /// (arc index, variable index) of each coupling variable g(e).
    pub coupling_vars: Vec<(usize, usize)>,
    pub alpha: usize,
}

/// max alpha subject to commodity i sending alpha units from s_i to t_i,
/// g(e) = sum_i f_i(e) and 0 <= f_i(e), g(e) <= c(e).
///
/// f_i(e) is only created for arcs (u, v) with u reachable from s_i and t_i
/// reachable from v, since other arcs cannot carry s_i-t_i flow at an
/// optimum; g(e) is dropped for arcs no commodity uses, and the redundant
/// conservation row at each t_i is omitted. The start routes equal small
/// flows along one s_i-t_i walk through every kept arc, scaled so that no
/// arc is more than half full.
pub fn build_concurrent_flow_lp(f: &FlowInstance) -> Result<ConcurrentFlowLp> {
    f.validate()?;
    if f.commodities.is_empty() {
        return Err(Error::InvalidArgument("concurrent flow needs at least one commodity".into()));
    }
    let m = f.arcs.len();
    let mut commodity_vars = Vec::new();
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    let mut load = vec![0.0f64; m];
    let mut flows: Vec<Vec<f64>> = Vec::new();
    for &(s, t) in &f.commodities {
        let mut from_s = vec![None; f.nodes];
        let mut to_t = vec![None; f.nodes];
        let fwd = f.reach(s, true, &mut from_s);
        let bwd = f.reach(t, false, &mut to_t);
        if !fwd[t] {
            return Err(Error::Disconnected(format!("{} unreachable from {}", t + 1, s + 1)));
        }
        let kept: Vec<usize> = (0..m).filter(|&k| fwd[f.arcs[k].from] && bwd[f.arcs[k].to]).collect();
        // walk s -> u, arc, v -> t for each kept arc, unit flow per walk
        let mut walk_flow = vec![0.0; m];
        for &k in &kept {
            let mut v = f.arcs[k].from;
            while let Some(p) = from_s[v] {
                walk_flow[p] += 1.0;
                v = f.arcs[p].from;
            }
            walk_flow[k] += 1.0;
            let mut v = f.arcs[k].to;
            while let Some(p) = to_t[v] {
                walk_flow[p] += 1.0;
                v = f.arcs[p].to;
            }
        }
        let per = 1.0 / kept.len() as f64;
        for k in 0..m {
            walk_flow[k] *= per;
            load[k] += walk_flow[k];
        }
        commodity_vars.push(kept);
        flows.push(walk_flow);
    }
    // one unit of alpha in the start uses load[k] of arc k
    let alpha0 =
        (0..m).filter(|&k| load[k] > 0.0).map(|k| 0.5 * f.arcs[k].cap as f64 / load[k]).fold(f64::INFINITY, f64::min);

    let mut x = Vec::new();
    let mut c = Vec::new();
    let mut layout = Vec::new();
    for (i, kept) in commodity_vars.iter().enumerate() {
        let mut vars = Vec::new();
        for &k in kept {
            vars.push((k, x.len()));
            x.push(alpha0 * flows[i][k]);
            lo.push(0.0);
            hi.push(f.arcs[k].cap as f64);
            c.push(0.0);
        }
        layout.push(vars);
    }
    let mut coupling = Vec::new();
    for k in (0..m).filter(|&k| load[k] > 0.0) {
        coupling.push((k, x.len()));
        x.push(alpha0 * load[k]);
        lo.push(0.0);
        hi.push(f.arcs[k].cap as f64);
        c.push(0.0);
    }
    let alpha = x.len();
    x.push(alpha0);
    lo.push(0.0);
    hi.push(f.arcs.iter().map(|a| a.cap as f64).sum::<f64>() + 1.0);
    c.push(-1.0);

    let mut entries = Vec::new();
    let mut rows = 0;
    for (i, vars) in layout.iter().enumerate() {
        let (s, t) = f.commodities[i];
        let mut node_row = vec![None; f.nodes];
        for &(k, _) in vars {
            for v in [f.arcs[k].from, f.arcs[k].to] {
                if v != t && node_row[v].is_none() {
                    node_row[v] = Some(rows);
                    rows += 1;
                }
            }
        }
        for &(k, j) in vars {
            if let Some(r) = node_row[f.arcs[k].from] {
                entries.push((r, j, 1.0));
            }
            if let Some(r) = node_row[f.arcs[k].to] {
                entries.push((r, j, -1.0));
            }
        }
        entries.push((node_row[s].expect("source has a kept arc"), alpha, -1.0));
    }
    for &(k, j) in &coupling {
        entries.push((rows, j, 1.0));
        for vars in &layout {
            if let Some(&(_, jv)) = vars.iter().find(|&&(kk, _)| kk == k) {
                entries.push((rows, jv, -1.0));
            }
        }
        rows += 1;
    }
    let n = x.len();
    let lp = LpProblem::new(
        rows,
        n,
        &entries,
        DVector::zeros(rows),
        DVector::from_vec(c),
        DVector::from_vec(lo),
        DVector::from_vec(hi),
        DVector::from_vec(x),
    )?;
    Ok(ConcurrentFlowLp { lp, commodity_vars: layout, coupling_vars: coupling, alpha })
}

#[derive(Debug, Clone)]
pub struct ConcurrentFlow {
    pub alpha: f64,
    /// Per commodity, the flow on every instance arc.
    pub flows: Vec<Vec<f64>>,
    pub stats: LpStats,
}

pub fn concurrent_flow(f: &FlowInstance, eps: f64, cfg: &IpmConfig) -> Result<ConcurrentFlow> {
    let built = build_concurrent_flow_lp(f)?;
    let sol = solve_lp(&built.lp, eps, cfg)?;
    let flows = built
        .commodity_vars
        .iter()
        .map(|vars| {
            let mut fl = vec![0.0; f.arcs.len()];
            for &(k, j) in vars {
                fl[k] = sol.y[j];
            }
            fl
        })
        .collect();
    Ok(ConcurrentFlow { alpha: sol.y[built.alpha], flows, stats: sol.stats })
}
