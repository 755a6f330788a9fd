//! Hierarchical collection problem on an infinite `b`-ary tree.
//!
//! A target is an infinite root path; a player starts at the root, moves along
//! tree edges and collects each target at some vertex on its path. Moving
//! between levels `k` and `k+1` costs `s^-k` in either direction and
//! collecting at level `k` costs `2 s^-k`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

const GAMMA_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HcpError {
    #[error("branch factor {branch} and scale {scale} must both be at least 2")]
    InvalidParams { branch: u32, scale: u32 },
    #[error("target {target}: child index {index} out of range for branch factor {branch}")]
    ChildOutOfRange { target: usize, index: u32, branch: u32 },
    #[error("targets {0} and {1} describe the same path")]
    DuplicateTarget(usize, usize),
    #[error("invalid plan at action {step}: {reason}")]
    InvalidPlan { step: usize, reason: String },
    #[error("search space too large: {0}")]
    SearchSpaceTooLarge(String),
    #[error("bound hypothesis violated: {0}")]
    HypothesisViolated(String),
}

/// Branch factor `b`, scale `s` and `gamma = log_s b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HcpParams {
    branch: u32,
    scale: u32,
    gamma: f64,
}

impl HcpParams {
    pub fn new(branch: u32, scale: u32) -> Result<Self, HcpError> {
        if branch < 2 || scale < 2 {
            return Err(HcpError::InvalidParams { branch, scale });
        }
        let gamma = f64::from(branch).ln() / f64::from(scale).ln();
        Ok(Self { branch, scale, gamma })
    }

    pub fn branch(&self) -> u32 {
        self.branch
    }

    pub fn scale(&self) -> u32 {
        self.scale
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn gamma_is_integer(&self) -> bool {
        (self.gamma - self.gamma.round()).abs() < GAMMA_TOL
    }

    /// Whether a vertex holding `n_v` targets is strictly above the
    /// `s/(s-1)` entry threshold. Ties stay at the parent.
    pub fn descends(&self, n_v: usize) -> bool {
        (n_v as u64) * u64::from(self.scale - 1) > u64::from(self.scale)
    }
}

/// Root path of a target. Indices past the stored depth are implicitly 0.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TargetPath(Vec<u32>);

impl TargetPath {
    pub fn new(children: Vec<u32>) -> Self {
        Self(children)
    }

    pub fn stored(&self) -> &[u32] {
        &self.0
    }

    pub fn stored_depth(&self) -> usize {
        self.0.len()
    }

    /// Child index taken when leaving level `k`.
    pub fn child(&self, k: usize) -> u32 {
        self.0.get(k).copied().unwrap_or(0)
    }

    pub fn passes_through(&self, prefix: &[u32]) -> bool {
        prefix.iter().enumerate().all(|(k, &c)| self.child(k) == c)
    }

    fn canonical(&self) -> &[u32] {
        let end = self.0.iter().rposition(|&c| c != 0).map_or(0, |i| i + 1);
        &self.0[..end]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HcpInstance {
    params: HcpParams,
    targets: Vec<TargetPath>,
    depth_cap: usize,
}

impl HcpInstance {
    /// Instance with pairwise distinct targets.
    pub fn new(params: HcpParams, targets: Vec<TargetPath>) -> Result<Self, HcpError> {
        let inst = Self::truncated(params, targets)?;
        let mut seen: BTreeMap<&[u32], usize> = BTreeMap::new();
        for (i, t) in inst.targets.iter().enumerate() {
            if let Some(&j) = seen.get(t.canonical()) {
                return Err(HcpError::DuplicateTarget(j, i));
            }
            seen.insert(t.canonical(), i);
        }
        Ok(inst)
    }

    /// Instance whose paths are only known to their stored depth; several
    /// targets may share a stored path. Plans never descend below the deepest
    /// stored index.
    pub fn truncated(params: HcpParams, targets: Vec<TargetPath>) -> Result<Self, HcpError> {
        for (i, t) in targets.iter().enumerate() {
            if let Some(&index) = t.0.iter().find(|&&c| c >= params.branch) {
                return Err(HcpError::ChildOutOfRange { target: i, index, branch: params.branch });
            }
        }
        let depth_cap = targets.iter().map(TargetPath::stored_depth).max().unwrap_or(0);
        Ok(Self { params, targets, depth_cap })
    }

    pub fn params(&self) -> &HcpParams {
        &self.params
    }

    pub fn targets(&self) -> &[TargetPath] {
        &self.targets
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Number of targets whose path passes through the vertex at `prefix`.
    pub fn targets_through(&self, prefix: &[u32]) -> usize {
        self.targets.iter().filter(|t| t.passes_through(prefix)).count()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(InstanceWire::from(self)).expect("instance serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, InstanceParseError> {
        let wire: InstanceWire = serde_json::from_str(text)?;
        let params = HcpParams::new(wire.b, wire.s)?;
        let targets = wire.targets.into_iter().map(TargetPath).collect();
        Ok(Self::new(params, targets)?)
    }
}

#[derive(Debug, Error)]
pub enum InstanceParseError {
    #[error("malformed instance JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Invalid(#[from] HcpError),
}

#[derive(Serialize, Deserialize)]
struct InstanceWire {
    b: u32,
    s: u32,
    targets: Vec<Vec<u32>>,
}

impl From<&HcpInstance> for InstanceWire {
    fn from(inst: &HcpInstance) -> Self {
        Self {
            b: inst.params.branch,
            s: inst.params.scale,
            targets: inst.targets.iter().map(|t| t.0.clone()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "ActionWire", try_from = "ActionWire")]
pub enum Action {
    MoveDown(u32),
    MoveUp,
    Collect(usize),
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum OpKind {
    Down,
    Up,
    Collect,
}

#[derive(Serialize, Deserialize)]
struct ActionWire {
    op: OpKind,
    #[serde(default)]
    arg: u64,
}

impl From<Action> for ActionWire {
    fn from(a: Action) -> Self {
        match a {
            Action::MoveDown(c) => Self { op: OpKind::Down, arg: u64::from(c) },
            Action::MoveUp => Self { op: OpKind::Up, arg: 0 },
            Action::Collect(i) => Self { op: OpKind::Collect, arg: i as u64 },
        }
    }
}

impl TryFrom<ActionWire> for Action {
    type Error = String;

    fn try_from(w: ActionWire) -> Result<Self, String> {
        Ok(match w.op {
            OpKind::Down => Action::MoveDown(u32::try_from(w.arg).map_err(|e| e.to_string())?),
            OpKind::Up => Action::MoveUp,
            OpKind::Collect => Action::Collect(usize::try_from(w.arg).map_err(|e| e.to_string())?),
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Plan {
    pub actions: Vec<Action>,
}

impl Plan {
    pub fn new(actions: Vec<Action>) -> Self {
        Self { actions }
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Number of times each edge is crossed, keyed by the path of its lower
    /// endpoint. Assumes the cursor never leaves the tree.
    pub fn edge_crossings(&self) -> BTreeMap<Vec<u32>, usize> {
        let mut cursor = Vec::new();
        let mut crossings = BTreeMap::new();
        for a in &self.actions {
            match *a {
                Action::MoveDown(c) => {
                    cursor.push(c);
                    *crossings.entry(cursor.clone()).or_insert(0) += 1;
                }
                Action::MoveUp => {
                    if !cursor.is_empty() {
                        *crossings.entry(cursor.clone()).or_insert(0) += 1;
                        cursor.pop();
                    }
                }
                Action::Collect(_) => {}
            }
        }
        crossings
    }

    /// Non-root vertices entered at least once.
    pub fn entered_vertices(&self) -> BTreeSet<Vec<u32>> {
        self.edge_crossings().into_keys().collect()
    }
}

/// Total cost of `plan`, validating it against `instance`.
pub fn plan_cost<S: Scalar>(plan: &Plan, instance: &HcpInstance) -> Result<S, HcpError> {
    let s = u64::from(instance.params.scale);
    let mut cursor: Vec<u32> = Vec::new();
    let mut collected = vec![false; instance.len()];
    let mut total = S::zero();
    let invalid = |step: usize, reason: String| HcpError::InvalidPlan { step, reason };
    for (step, action) in plan.actions.iter().enumerate() {
        let level = cursor.len() as u32;
        match *action {
            Action::MoveDown(c) => {
                if c >= instance.params.branch {
                    return Err(invalid(step, format!("child {c} out of range")));
                }
                total = total + S::inv_pow(s, level);
                cursor.push(c);
            }
            Action::MoveUp => {
                if cursor.pop().is_none() {
                    return Err(invalid(step, "move up from the root".into()));
                }
                total = total + S::inv_pow(s, level - 1);
            }
            Action::Collect(id) => {
                let target = instance
                    .targets
                    .get(id)
                    .ok_or_else(|| invalid(step, format!("unknown target {id}")))?;
                if collected[id] {
                    return Err(invalid(step, format!("target {id} collected twice")));
                }
                if !target.passes_through(&cursor) {
                    return Err(invalid(step, format!("target {id} is not on the current vertex")));
                }
                collected[id] = true;
                total = total + S::from_u64(2) * S::inv_pow(s, level);
            }
        }
    }
    if !cursor.is_empty() {
        return Err(invalid(plan.actions.len(), "plan does not return to the root".into()));
    }
    if let Some(id) = collected.iter().position(|c| !c) {
        return Err(invalid(plan.actions.len(), format!("target {id} never collected")));
    }
    Ok(total)
}

/// Depth-first tour of the vertices holding more than `s/(s-1)` targets,
/// collecting every target at the deepest visited vertex on its path.
/// An empty instance yields the empty plan.
pub fn construct_optimal_plan(instance: &HcpInstance) -> Plan {
    let mut actions = Vec::new();
    if !instance.is_empty() {
        let ids: Vec<usize> = (0..instance.len()).collect();
        descend(instance, 0, ids, &mut actions);
    }
    Plan { actions }
}

fn descend(instance: &HcpInstance, depth: usize, ids: Vec<usize>, actions: &mut Vec<Action>) {
    let mut groups: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    let mut here = Vec::new();
    if depth < instance.depth_cap {
        for id in ids {
            groups.entry(instance.targets[id].child(depth)).or_default().push(id);
        }
        groups.retain(|_, members| {
            if instance.params.descends(members.len()) {
                true
            } else {
                here.append(members);
                false
            }
        });
        here.sort_unstable();
    } else {
        here = ids;
    }
    actions.extend(here.into_iter().map(Action::Collect));
    for (child, members) in groups {
        actions.push(Action::MoveDown(child));
        descend(instance, depth + 1, members, actions);
        actions.push(Action::MoveUp);
    }
}

/// Smallest `k` with `b^k >= n`, minus one, floored at zero.
pub fn default_k_star(n: usize, branch: u32) -> u32 {
    let mut k = 0u32;
    let mut reach = 1u128;
    while reach < n as u128 {
        reach *= u128::from(branch);
        k += 1;
    }
    k.saturating_sub(1)
}

/// Tour every level-`k_star` vertex and collect each target there.
pub fn level_k_plan(instance: &HcpInstance, k_star: u32) -> Plan {
    let k = k_star as usize;
    let mut buckets: BTreeMap<Vec<u32>, Vec<usize>> = BTreeMap::new();
    for (id, t) in instance.targets.iter().enumerate() {
        let key: Vec<u32> = (0..k).map(|d| t.child(d)).collect();
        buckets.entry(key).or_default().push(id);
    }
    let mut actions = Vec::new();
    let mut prefix = Vec::with_capacity(k);
    full_tour(instance.params.branch, k, &mut prefix, &buckets, &mut actions);
    Plan { actions }
}

fn full_tour(
    branch: u32,
    k: usize,
    prefix: &mut Vec<u32>,
    buckets: &BTreeMap<Vec<u32>, Vec<usize>>,
    actions: &mut Vec<Action>,
) {
    if prefix.len() == k {
        if let Some(ids) = buckets.get(prefix.as_slice()) {
            actions.extend(ids.iter().copied().map(Action::Collect));
        }
        return;
    }
    for c in 0..branch {
        actions.push(Action::MoveDown(c));
        prefix.push(c);
        full_tour(branch, k, prefix, buckets, actions);
        prefix.pop();
        actions.push(Action::MoveUp);
    }
}

/// Closed-form cost of [`level_k_plan`]: movement `2 sum_{k<k*} b (b/s)^k`
/// plus collection `2 n s^-k*`.
pub fn level_k_cost(n: usize, params: &HcpParams, k_star: u32) -> f64 {
    let b = f64::from(params.branch);
    let s = f64::from(params.scale);
    let movement: f64 = (0..k_star).map(|k| 2.0 * b * (b / s).powi(k as i32)).sum();
    movement + 2.0 * n as f64 * s.powi(-(k_star as i32))
}

/// Worst-case optimal cost bound `6 s n^(1 - 1/gamma)`, valid for `s >= 2`
/// and `gamma >= 2`.
pub fn hcp_star_bound(n: usize, params: &HcpParams) -> Result<f64, HcpError> {
    if params.scale < 2 {
        return Err(HcpError::HypothesisViolated(format!("scale {} < 2", params.scale)));
    }
    if params.gamma < 2.0 - GAMMA_TOL {
        return Err(HcpError::HypothesisViolated(format!("gamma {} < 2", params.gamma)));
    }
    if n == 0 {
        return Ok(0.0);
    }
    Ok(6.0 * f64::from(params.scale) * (n as f64).powf(1.0 - 1.0 / params.gamma))
}

pub const BRUTE_MAX_TARGETS: usize = 6;
pub const BRUTE_MAX_DEPTH: usize = 4;
pub const BRUTE_MAX_BRANCH: u32 = 4;

struct Vertex {
    parent: Option<usize>,
    children: Vec<(u32, usize)>,
    /// Targets whose path passes through this vertex.
    mask: u32,
}

#[derive(Clone)]
struct Label<S> {
    cost: S,
    downs: u32,
}

impl<S: Scalar> Label<S> {
    fn better_than(&self, other: &Self) -> bool {
        match self.cost.partial_cmp(&other.cost) {
            Some(Ordering::Less) => true,
            Some(Ordering::Equal) => self.downs < other.downs,
            _ => false,
        }
    }
}

struct QueueEntry<S> {
    label: Label<S>,
    state: usize,
}

impl<S: Scalar> PartialEq for QueueEntry<S> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<S: Scalar> Eq for QueueEntry<S> {}

impl<S: Scalar> PartialOrd for QueueEntry<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<S: Scalar> Ord for QueueEntry<S> {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .label
            .cost
            .partial_cmp(&self.label.cost)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.label.downs.cmp(&self.label.downs))
            .then_with(|| other.state.cmp(&self.state))
    }
}

/// Exhaustive minimum-cost plan by uniform-cost search over
/// (cursor vertex, collected set). Only vertices at depth `<= depth_limit`
/// that some target passes through are considered. Among equal costs the plan
/// with the fewest downward moves wins.
pub fn brute_force_optimal<S: Scalar>(
    instance: &HcpInstance,
    depth_limit: usize,
) -> Result<(Plan, S), HcpError> {
    let n = instance.len();
    let branch = instance.params.branch;
    if n > BRUTE_MAX_TARGETS || depth_limit > BRUTE_MAX_DEPTH || branch > BRUTE_MAX_BRANCH {
        return Err(HcpError::SearchSpaceTooLarge(format!(
            "n={n} (max {BRUTE_MAX_TARGETS}), depth={depth_limit} (max {BRUTE_MAX_DEPTH}), b={branch} (max {BRUTE_MAX_BRANCH})"
        )));
    }
    if n == 0 {
        return Ok((Plan::default(), S::zero()));
    }

    let mut vertices = vec![Vertex { parent: None, children: Vec::new(), mask: (1u32 << n) - 1 }];
    let mut levels = vec![0usize];
    let mut prefixes: Vec<Vec<u32>> = vec![Vec::new()];
    let mut frontier = vec![0usize];
    for depth in 0..depth_limit {
        let mut next = Vec::new();
        for &v in &frontier {
            for c in 0..branch {
                let mut prefix = prefixes[v].clone();
                prefix.push(c);
                let mask = instance
                    .targets
                    .iter()
                    .enumerate()
                    .filter(|(_, t)| t.passes_through(&prefix))
                    .fold(0u32, |m, (i, _)| m | (1 << i));
                if mask == 0 {
                    continue;
                }
                let id = vertices.len();
                vertices.push(Vertex { parent: Some(v), children: Vec::new(), mask });
                vertices[v].children.push((c, id));
                levels.push(depth + 1);
                prefixes.push(prefix);
                next.push(id);
            }
        }
        frontier = next;
    }

    let s = u64::from(instance.params.scale);
    let full = (1usize << n) - 1;
    let width = 1usize << n;
    let n_states = vertices.len() * width;
    let mut best: Vec<Option<Label<S>>> = vec![None; n_states];
    let mut prev: Vec<Option<(usize, Action)>> = vec![None; n_states];
    let mut done = vec![false; n_states];
    let mut heap = BinaryHeap::new();

    let start = 0;
    best[start] = Some(Label { cost: S::zero(), downs: 0 });
    heap.push(QueueEntry { label: Label { cost: S::zero(), downs: 0 }, state: start });
    let goal = full;

    while let Some(QueueEntry { label, state }) = heap.pop() {
        if done[state] {
            continue;
        }
        done[state] = true;
        if state == goal {
            break;
        }
        let v = state / width;
        let mask = state % width;
        let level = levels[v] as u32;

        let mut moves: Vec<(usize, Action, S, u32)> = Vec::new();
        for &(c, child) in &vertices[v].children {
            moves.push((child * width + mask, Action::MoveDown(c), S::inv_pow(s, level), 1));
        }
        if let Some(parent) = vertices[v].parent {
            moves.push((parent * width + mask, Action::MoveUp, S::inv_pow(s, level - 1), 0));
        }
        for i in 0..n {
            let bit = 1usize << i;
            if mask & bit == 0 && vertices[v].mask as usize & bit != 0 {
                let cost = S::from_u64(2) * S::inv_pow(s, level);
                moves.push((v * width + (mask | bit), Action::Collect(i), cost, 0));
            }
        }
        for (next, action, step_cost, downs) in moves {
            if done[next] {
                continue;
            }
            let cand = Label { cost: label.cost.clone() + step_cost, downs: label.downs + downs };
            let improves = best[next].as_ref().is_none_or(|cur| cand.better_than(cur));
            if improves {
                best[next] = Some(cand.clone());
                prev[next] = Some((state, action));
                heap.push(QueueEntry { label: cand, state: next });
            }
        }
    }

    let cost = best[goal].clone().expect("goal reachable: every target can be collected at the root").cost;
    let mut actions = Vec::new();
    let mut cur = goal;
    while let Some((p, a)) = prev[cur] {
        actions.push(a);
        cur = p;
    }
    actions.reverse();
    Ok((Plan { actions }, cost))
}
