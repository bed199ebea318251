//! Event-driven simulation of the open-boundary ASEP family.
//!
//! The canonical engine realizes one Poisson clock per channel (rate-1 and
//! rate-q clocks on every edge, rate-alpha and rate-gamma clocks at the
//! boundary) as deterministic counter-based streams. Several processes can
//! subscribe to the same streams, which is exactly the canonical coupling:
//! shared clocks on a site prefix and on the boundary, independent clocks
//! beyond. Every ring is realized, including ineffective ones, so coupled
//! marginals see identical clock times.
//!
//! Four state spaces share the engine: single-species `{0,1}^N`,
//! multi-species `{1,2,3,inf}^N`, fully colored (a signed permutation with
//! right-multiplication dynamics), and the half-space process on a growing
//! window. Rate-1 edge rings sort the pair so the higher-priority color
//! ends on the right; rate-q rings sort the other way; for a single species
//! this is the `(1,0) -> (0,1)` jump at rate 1 and its reversal at rate
//! `q`.
//!
//! For long half-space current runs the per-ring cost of realizing every
//! clock is prohibitive, so [`simulate_halfspace`] uses an aggregated
//! direct-method loop over currently effective channels (memorylessness
//! makes the regeneration exact). Its law is checked against the canonical
//! engine in tests; couplings always use the canonical engine.

use crate::config::{ColoredConfig, Config, Species};
use crate::params::ModelParams;
use crate::perm::SignedPermutation;
use crate::rng::{Channel, ClockStream, CounterRng};
use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("half-space window would exceed the cap of {0} sites")]
    WindowCap(usize),
    #[error("incompatible coupled specs: {0}")]
    Incompatible(String),
}

/// How the reservoir is realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryMechanism {
    /// Independent rate-alpha and rate-gamma clocks (the canonical
    /// coupling's description).
    TwoClock,
    /// A single rate-alpha clock; the ring is accepted with probability 1
    /// for an entry and `r = gamma/alpha` for an exit. Same law.
    AcceptReject,
}

/// Default hard cap on the half-space window.
pub const DEFAULT_WINDOW_CAP: usize = 1 << 22;

/// Half-space occupation state on a growing window `[1, W]`. Sites beyond
/// the rightmost particle are vacant, so clocks there cannot fire an
/// effective event; the window doubles whenever the front reaches `W - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpaceState {
    occ: Vec<u8>,
    rightmost: usize,
    count: usize,
    entries: u64,
    exits: u64,
    cap: usize,
}

impl HalfSpaceState {
    pub fn new(initial: &[u8], cap: usize) -> Self {
        assert!(initial.iter().all(|&s| s <= 1));
        let rightmost = initial.iter().rposition(|&s| s == 1).map_or(0, |i| i + 1);
        let window = (rightmost + 8).max(16).next_power_of_two();
        let mut occ = initial.to_vec();
        occ.resize(window, 0);
        let count = occ.iter().map(|&s| s as usize).sum();
        HalfSpaceState {
            occ,
            rightmost,
            count,
            entries: 0,
            exits: 0,
            cap,
        }
    }

    pub fn empty(cap: usize) -> Self {
        HalfSpaceState::new(&[], cap)
    }

    pub fn window(&self) -> usize {
        self.occ.len()
    }

    pub fn rightmost_particle(&self) -> usize {
        self.rightmost
    }

    pub fn particle_count(&self) -> usize {
        self.count
    }

    /// Net current: entries minus exits.
    pub fn current(&self) -> i64 {
        self.entries as i64 - self.exits as i64
    }

    pub fn occupied(&self, x: usize) -> bool {
        x >= 1 && x <= self.occ.len() && self.occ[x - 1] == 1
    }

    /// Occupations on `[1, n]` as a segment configuration.
    pub fn prefix_config(&self, n: usize) -> Config {
        Config::new((1..=n).map(|x| u8::from(self.occupied(x))).collect())
    }

    fn grow_if_needed(&mut self) -> Result<bool, SimError> {
        if self.rightmost + 1 < self.window() {
            return Ok(false);
        }
        let new = self.window() * 2;
        if new > self.cap {
            return Err(SimError::WindowCap(self.cap));
        }
        self.occ.resize(new, 0);
        Ok(true)
    }

    /// Apply one channel ring. Returns whether the window grew.
    fn apply(
        &mut self,
        ch: Channel,
        u: f64,
        r: f64,
        boundary: BoundaryMechanism,
    ) -> Result<bool, SimError> {
        match ch {
            Channel::EdgeFwd(x) => {
                let x = x as usize;
                if x < self.window() && self.occ[x - 1] == 1 && self.occ[x] == 0 {
                    self.occ[x - 1] = 0;
                    self.occ[x] = 1;
                    if x == self.rightmost {
                        self.rightmost = x + 1;
                        return self.grow_if_needed();
                    }
                }
            }
            Channel::EdgeBwd(x) => {
                let x = x as usize;
                if x < self.window() && self.occ[x - 1] == 0 && self.occ[x] == 1 {
                    self.occ[x - 1] = 1;
                    self.occ[x] = 0;
                    if x + 1 == self.rightmost {
                        self.rightmost = x;
                    }
                }
            }
            Channel::Enter => match boundary {
                BoundaryMechanism::TwoClock => self.do_enter(),
                BoundaryMechanism::AcceptReject => {
                    if self.occ[0] == 0 {
                        self.do_enter();
                    } else if u < r {
                        self.do_exit();
                    }
                }
            },
            Channel::Exit => {
                if boundary == BoundaryMechanism::TwoClock {
                    self.do_exit();
                }
            }
        }
        Ok(false)
    }

    fn do_enter(&mut self) {
        if self.occ[0] == 0 {
            self.occ[0] = 1;
            self.count += 1;
            self.entries += 1;
            self.rightmost = self.rightmost.max(1);
        }
    }

    fn do_exit(&mut self) {
        if self.occ[0] == 1 {
            self.occ[0] = 0;
            self.count -= 1;
            self.exits += 1;
            if self.rightmost == 1 {
                self.rightmost = 0;
            }
        }
    }
}

/// State of one simulated process.
#[derive(Debug, Clone, PartialEq)]
pub enum SimState {
    Single(Config),
    Multi(ColoredConfig),
    Colored(SignedPermutation),
    HalfSpace(HalfSpaceState),
}

impl SimState {
    /// Number of sites with their own clocks; `None` for the half-space
    /// (conceptually infinite).
    fn segment_len(&self) -> Option<usize> {
        match self {
            SimState::Single(c) => Some(c.n()),
            SimState::Multi(c) => Some(c.n()),
            SimState::Colored(p) => Some(p.n()),
            SimState::HalfSpace(_) => None,
        }
    }

    fn window_len(&self) -> usize {
        match self {
            SimState::Single(c) => c.n(),
            SimState::Multi(c) => c.n(),
            SimState::Colored(p) => p.n(),
            SimState::HalfSpace(h) => h.window(),
        }
    }

    pub fn as_single(&self) -> Option<&Config> {
        match self {
            SimState::Single(c) => Some(c),
            _ => None,
        }
    }

    pub fn as_halfspace(&self) -> Option<&HalfSpaceState> {
        match self {
            SimState::HalfSpace(h) => Some(h),
            _ => None,
        }
    }

    pub fn as_colored(&self) -> Option<&SignedPermutation> {
        match self {
            SimState::Colored(p) => Some(p),
            _ => None,
        }
    }

    pub fn as_multi(&self) -> Option<&ColoredConfig> {
        match self {
            SimState::Multi(c) => Some(c),
            _ => None,
        }
    }

    /// Apply one channel ring in place: the elementary step of every
    /// process (ineffective rings are legal no-ops). `u` is the ring's
    /// auxiliary uniform and `r = gamma/alpha`; returns whether a
    /// half-space window grew.
    pub fn apply(
        &mut self,
        ch: Channel,
        u: f64,
        r: f64,
        boundary: BoundaryMechanism,
    ) -> Result<bool, SimError> {
        match self {
            SimState::Single(cfg) => {
                apply_single(cfg, ch, u, r, boundary);
                Ok(false)
            }
            SimState::Multi(cfg) => {
                apply_multi(cfg, ch, u, r, boundary);
                Ok(false)
            }
            SimState::Colored(pi) => {
                apply_colored(pi, ch, u, r, boundary);
                Ok(false)
            }
            SimState::HalfSpace(h) => h.apply(ch, u, r, boundary),
        }
    }
}

fn apply_single(cfg: &mut Config, ch: Channel, u: f64, r: f64, boundary: BoundaryMechanism) {
    let n = cfg.n();
    match ch {
        Channel::EdgeFwd(x) => {
            let x = x as usize;
            if x < n && cfg.occupied(x) && !cfg.occupied(x + 1) {
                cfg.set(x, 0);
                cfg.set(x + 1, 1);
            }
        }
        Channel::EdgeBwd(x) => {
            let x = x as usize;
            if x < n && !cfg.occupied(x) && cfg.occupied(x + 1) {
                cfg.set(x, 1);
                cfg.set(x + 1, 0);
            }
        }
        Channel::Enter => match boundary {
            BoundaryMechanism::TwoClock => {
                if !cfg.occupied(1) {
                    cfg.set(1, 1);
                }
            }
            BoundaryMechanism::AcceptReject => {
                if !cfg.occupied(1) {
                    cfg.set(1, 1);
                } else if u < r {
                    cfg.set(1, 0);
                }
            }
        },
        Channel::Exit => {
            if boundary == BoundaryMechanism::TwoClock && cfg.occupied(1) {
                cfg.set(1, 0);
            }
        }
    }
}

fn apply_multi(cfg: &mut ColoredConfig, ch: Channel, u: f64, r: f64, boundary: BoundaryMechanism) {
    let n = cfg.n();
    let promote = |s: Species| match s {
        Species::Hole => Species::First,
        Species::Third => Species::Second,
        other => other,
    };
    let demote = |s: Species| match s {
        Species::First => Species::Hole,
        Species::Second => Species::Third,
        other => other,
    };
    match ch {
        // rate-1 ring: the higher-priority (smaller rank) color moves right
        Channel::EdgeFwd(x) => {
            let x = x as usize;
            if x < n {
                let (a, b) = (cfg.get(x), cfg.get(x + 1));
                if a.rank() < b.rank() {
                    cfg.set(x, b);
                    cfg.set(x + 1, a);
                }
            }
        }
        Channel::EdgeBwd(x) => {
            let x = x as usize;
            if x < n {
                let (a, b) = (cfg.get(x), cfg.get(x + 1));
                if a.rank() > b.rank() {
                    cfg.set(x, b);
                    cfg.set(x + 1, a);
                }
            }
        }
        Channel::Enter => match boundary {
            BoundaryMechanism::TwoClock => cfg.set(1, promote(cfg.get(1))),
            BoundaryMechanism::AcceptReject => {
                let s = cfg.get(1);
                if matches!(s, Species::Hole | Species::Third) {
                    cfg.set(1, promote(s));
                } else if u < r {
                    cfg.set(1, demote(s));
                }
            }
        },
        Channel::Exit => {
            if boundary == BoundaryMechanism::TwoClock {
                cfg.set(1, demote(cfg.get(1)));
            }
        }
    }
}

fn apply_colored(
    pi: &mut SignedPermutation,
    ch: Channel,
    u: f64,
    r: f64,
    boundary: BoundaryMechanism,
) {
    let n = pi.n();
    match ch {
        // priority of a signed color is "more negative wins", so the rate-1
        // sort leaves the larger integer on the left
        Channel::EdgeFwd(x) => {
            let x = x as usize;
            if x < n && pi.value_at(x) < pi.value_at(x + 1) {
                pi.right_mul_generator_in_place(x).unwrap();
            }
        }
        Channel::EdgeBwd(x) => {
            let x = x as usize;
            if x < n && pi.value_at(x) > pi.value_at(x + 1) {
                pi.right_mul_generator_in_place(x).unwrap();
            }
        }
        Channel::Enter => match boundary {
            BoundaryMechanism::TwoClock => {
                if pi.value_at(1) > 0 {
                    pi.right_mul_generator_in_place(0).unwrap();
                }
            }
            BoundaryMechanism::AcceptReject => {
                if pi.value_at(1) > 0 || u < r {
                    pi.right_mul_generator_in_place(0).unwrap();
                }
            }
        },
        Channel::Exit => {
            if boundary == BoundaryMechanism::TwoClock && pi.value_at(1) < 0 {
                pi.right_mul_generator_in_place(0).unwrap();
            }
        }
    }
}

/// One simulated process: parameters, initial state, horizon, observation
/// plan, and the coupling cutoff (edges with both endpoints at or below the
/// cutoff, plus the boundary, draw from the shared streams).
#[derive(Debug, Clone)]
pub struct SimSpec {
    pub params: ModelParams,
    pub init: SimState,
    pub t_end: f64,
    pub sample_times: Vec<f64>,
    pub boundary: BoundaryMechanism,
    pub shared_prefix: Option<usize>,
    pub window_cap: usize,
}

impl SimSpec {
    pub fn new(params: ModelParams, init: SimState, t_end: f64) -> Self {
        assert!(t_end >= 0.0);
        SimSpec {
            params,
            init,
            t_end,
            sample_times: Vec::new(),
            boundary: BoundaryMechanism::TwoClock,
            shared_prefix: None,
            window_cap: DEFAULT_WINDOW_CAP,
        }
    }

    pub fn with_samples(mut self, times: Vec<f64>) -> Self {
        assert!(times.windows(2).all(|w| w[0] <= w[1]));
        self.sample_times = times;
        self
    }

    pub fn with_boundary(mut self, b: BoundaryMechanism) -> Self {
        self.boundary = b;
        self
    }

    pub fn with_shared_prefix(mut self, cutoff: usize) -> Self {
        self.shared_prefix = Some(cutoff);
        self
    }
}

/// Recorded observables of one process.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<(f64, SimState)>,
    pub final_state: SimState,
    pub final_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapKey {
    t: f64,
    u: f64,
    scope: u64,
    code: u64,
    stream: usize,
    channel: Channel,
}

impl Eq for HeapKey {}

impl Ord for HeapKey {
    fn cmp(&self, other: &Self) -> Ordering {
        // ties broken by (scope, code) for reproducibility under float
        // collisions
        self.t
            .total_cmp(&other.t)
            .then(self.scope.cmp(&other.scope))
            .then(self.code.cmp(&other.code))
    }
}

impl PartialOrd for HeapKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const SHARED_SCOPE: u64 = 0;

fn private_scope(p: usize) -> u64 {
    p as u64 + 1
}

struct Engine {
    master_seed: u64,
    streams: Vec<ClockStream>,
    registered: HashMap<(u64, u64), usize>,
    heap: BinaryHeap<std::cmp::Reverse<HeapKey>>,
}

impl Engine {
    fn new(master_seed: u64) -> Self {
        Engine {
            master_seed,
            streams: Vec::new(),
            registered: HashMap::new(),
            heap: BinaryHeap::new(),
        }
    }

    /// Create the channel's stream if absent and schedule its first event
    /// strictly after `after` (a channel joining mid-run conceptually
    /// existed from time zero, so earlier rings are discarded, not shifted).
    fn register(&mut self, scope: u64, channel: Channel, rate: f64, after: f64) {
        if rate <= 0.0 {
            return;
        }
        let key = (scope, channel.code());
        if self.registered.contains_key(&key) {
            return;
        }
        let mut stream = ClockStream::new(self.master_seed, scope, channel, rate);
        let (t, u) = if after > 0.0 {
            stream.next_event_after(after)
        } else {
            stream.next_event()
        };
        let idx = self.streams.len();
        self.registered.insert(key, idx);
        self.streams.push(stream);
        self.heap.push(std::cmp::Reverse(HeapKey {
            t,
            u,
            scope,
            code: channel.code(),
            stream: idx,
            channel,
        }));
    }
}

/// Register every channel a process needs, splitting edges at the shared
/// cutoff. `window` is its current geometry length.
fn register_process_channels(
    engine: &mut Engine,
    p: usize,
    params: &ModelParams,
    boundary: BoundaryMechanism,
    cutoff: usize,
    window: usize,
    after: f64,
) {
    engine.register(SHARED_SCOPE, Channel::Enter, params.alpha, after);
    if boundary == BoundaryMechanism::TwoClock {
        engine.register(SHARED_SCOPE, Channel::Exit, params.gamma, after);
    }
    for x in 1..window {
        let scope = if x + 1 <= cutoff {
            SHARED_SCOPE
        } else {
            private_scope(p)
        };
        engine.register(scope, Channel::EdgeFwd(x as u32), 1.0, after);
        engine.register(scope, Channel::EdgeBwd(x as u32), params.q, after);
    }
}

/// Does channel `ch` under `scope` drive process `p`?
fn subscribed(scope: u64, ch: Channel, p: usize, seg_len: Option<usize>, cutoff: usize) -> bool {
    let in_geometry = match ch {
        Channel::Enter | Channel::Exit => true,
        Channel::EdgeFwd(x) | Channel::EdgeBwd(x) => match seg_len {
            Some(n) => (x as usize) < n,
            None => true,
        },
    };
    if !in_geometry {
        return false;
    }
    match ch {
        Channel::Enter | Channel::Exit => scope == SHARED_SCOPE,
        Channel::EdgeFwd(x) | Channel::EdgeBwd(x) => {
            if (x as usize) + 1 <= cutoff {
                scope == SHARED_SCOPE
            } else {
                scope == private_scope(p)
            }
        }
    }
}

/// Drive several processes on coupled clock streams until `t_end`, invoking
/// `hook` after every ring; the hook may stop the run by returning `false`.
fn drive<F: FnMut(f64, &[SimState]) -> bool>(
    specs: &[SimSpec],
    master_seed: u64,
    mut hook: F,
) -> Result<Vec<Trajectory>, SimError> {
    assert!(!specs.is_empty());
    let p0 = &specs[0].params;
    let t_end = specs[0].t_end;
    let sample_times = specs[0].sample_times.clone();
    for s in specs.iter().skip(1) {
        if s.params.q != p0.q || s.params.alpha != p0.alpha || s.params.gamma != p0.gamma {
            return Err(SimError::Incompatible("boundary/bulk rates differ".into()));
        }
        if s.t_end != t_end || s.sample_times != sample_times {
            return Err(SimError::Incompatible(
                "horizons or sample plans differ".into(),
            ));
        }
        if s.boundary != specs[0].boundary {
            return Err(SimError::Incompatible("boundary mechanisms differ".into()));
        }
        if s.shared_prefix != specs[0].shared_prefix {
            return Err(SimError::Incompatible("shared prefixes differ".into()));
        }
    }
    let boundary = specs[0].boundary;
    // default cutoff: the smallest segment length present, else the
    // smallest initial window
    let cutoff = specs[0].shared_prefix.unwrap_or_else(|| {
        specs
            .iter()
            .filter_map(|s| s.init.segment_len())
            .min()
            .unwrap_or_else(|| specs.iter().map(|s| s.init.window_len()).min().unwrap())
    });
    for s in specs {
        if let Some(n) = s.init.segment_len() {
            if cutoff > n {
                return Err(SimError::Incompatible(format!(
                    "shared prefix {cutoff} exceeds a segment of length {n}"
                )));
            }
        }
    }
    let r = p0.r();
    let mut states: Vec<SimState> = specs.iter().map(|s| s.init.clone()).collect();
    let mut engine = Engine::new(master_seed);
    for (p, s) in specs.iter().enumerate() {
        register_process_channels(&mut engine, p, p0, boundary, cutoff, s.init.window_len(), 0.0);
    }
    let mut samples: Vec<Vec<(f64, SimState)>> = vec![Vec::new(); specs.len()];
    let mut next_sample = 0usize;
    macro_rules! record_up_to {
        ($tev:expr) => {
            while next_sample < sample_times.len()
                && sample_times[next_sample] < $tev
                && sample_times[next_sample] <= t_end
            {
                let ts = sample_times[next_sample];
                for (p, st) in states.iter().enumerate() {
                    samples[p].push((ts, st.clone()));
                }
                next_sample += 1;
            }
        };
    }
    'outer: while let Some(std::cmp::Reverse(key)) = engine.heap.pop() {
        if key.t > t_end {
            break;
        }
        record_up_to!(key.t);
        // reschedule this channel's next ring
        let (t_next, u_next) = engine.streams[key.stream].next_event();
        engine.heap.push(std::cmp::Reverse(HeapKey {
            t: t_next,
            u: u_next,
            ..key
        }));
        let mut grew = Vec::new();
        for p in 0..states.len() {
            let seg_len = states[p].segment_len();
            if subscribed(key.scope, key.channel, p, seg_len, cutoff) {
                if states[p].apply(key.channel, key.u, r, boundary)? {
                    grew.push(p);
                }
            }
        }
        for p in grew {
            register_process_channels(
                &mut engine,
                p,
                p0,
                boundary,
                cutoff,
                states[p].window_len(),
                key.t,
            );
        }
        if !hook(key.t, &states) {
            break 'outer;
        }
    }
    record_up_to!(f64::INFINITY);
    Ok(states
        .into_iter()
        .zip(samples)
        .map(|(st, sm)| Trajectory {
            samples: sm,
            final_state: st,
            final_time: t_end,
        })
        .collect())
}

fn solo_cutoff(spec: &SimSpec) -> usize {
    match spec.init.segment_len() {
        Some(n) => n,
        None => 1 << 20,
    }
}

/// Simulate one process on its own (all channels shared-scope).
pub fn simulate(spec: &SimSpec, master_seed: u64) -> Result<Trajectory, SimError> {
    let mut spec = spec.clone();
    if spec.shared_prefix.is_none() {
        spec.shared_prefix = Some(solo_cutoff(&spec));
    }
    let mut out = drive(std::slice::from_ref(&spec), master_seed, |_, _| true)?;
    Ok(out.pop().unwrap())
}

/// Couple several processes through shared clock streams. All specs must
/// share rates, horizon, sample plan, and cutoff.
pub fn couple(specs: &[SimSpec], master_seed: u64) -> Result<Vec<Trajectory>, SimError> {
    drive(specs, master_seed, |_, _| true)
}

/// First event time at which the post-event state satisfies the predicate
/// (0 if the initial state already does), or `None` within the horizon.
pub fn hitting_time<F: Fn(&SimState) -> bool>(
    spec: &SimSpec,
    pred: F,
    master_seed: u64,
) -> Result<Option<f64>, SimError> {
    if pred(&spec.init) {
        return Ok(Some(0.0));
    }
    let mut spec = spec.clone();
    if spec.shared_prefix.is_none() {
        spec.shared_prefix = Some(solo_cutoff(&spec));
    }
    let mut hit = None;
    drive(std::slice::from_ref(&spec), master_seed, |t, states| {
        if pred(&states[0]) {
            hit = Some(t);
            false
        } else {
            true
        }
    })?;
    Ok(hit)
}

/// Result of a fast half-space run.
#[derive(Debug, Clone)]
pub struct HalfSpaceRun {
    /// `(time, current, rightmost particle)` at the sample times.
    pub samples: Vec<(f64, i64, usize)>,
    pub final_state: HalfSpaceState,
}

/// Fast half-space simulation by the aggregated direct method: only
/// currently effective channels carry rate, so the cost scales with the
/// number of actual moves. Exact in law by memorylessness; deterministic
/// given the seed. Couplings must use [`couple`], which realizes full
/// per-channel streams.
pub fn simulate_halfspace(
    params: &ModelParams,
    initial: &[u8],
    t_end: f64,
    sample_times: &[f64],
    master_seed: u64,
    window_cap: usize,
) -> Result<HalfSpaceRun, SimError> {
    assert!(sample_times.windows(2).all(|w| w[0] <= w[1]));
    let mut state = HalfSpaceState::new(initial, window_cap);
    let mut rng = CounterRng::new(master_seed, u64::MAX, 0);
    let q = params.q;
    let (alpha, gamma) = (params.alpha, params.gamma);
    let sentinel = u32::MAX;
    let mut fwd_list: Vec<u32> = Vec::new();
    let mut bwd_list: Vec<u32> = Vec::new();
    let mut fwd_pos: Vec<u32> = vec![sentinel; state.window() + 1];
    let mut bwd_pos: Vec<u32> = vec![sentinel; state.window() + 1];
    macro_rules! refresh_edge {
        ($x:expr) => {{
            let x = $x;
            if x >= 1 && x < state.window() {
                let a = state.occ[x - 1];
                let b = state.occ[x];
                let want_fwd = a == 1 && b == 0;
                if want_fwd != (fwd_pos[x] != sentinel) {
                    if want_fwd {
                        fwd_pos[x] = fwd_list.len() as u32;
                        fwd_list.push(x as u32);
                    } else {
                        let pos = fwd_pos[x] as usize;
                        fwd_list.swap_remove(pos);
                        if pos < fwd_list.len() {
                            fwd_pos[fwd_list[pos] as usize] = pos as u32;
                        }
                        fwd_pos[x] = sentinel;
                    }
                }
                let want_bwd = a == 0 && b == 1;
                if want_bwd != (bwd_pos[x] != sentinel) {
                    if want_bwd {
                        bwd_pos[x] = bwd_list.len() as u32;
                        bwd_list.push(x as u32);
                    } else {
                        let pos = bwd_pos[x] as usize;
                        bwd_list.swap_remove(pos);
                        if pos < bwd_list.len() {
                            bwd_pos[bwd_list[pos] as usize] = pos as u32;
                        }
                        bwd_pos[x] = sentinel;
                    }
                }
            }
        }};
    }
    for x in 1..state.window() {
        refresh_edge!(x);
    }
    let mut t = 0.0f64;
    let mut sample_idx = 0usize;
    let mut samples = Vec::with_capacity(sample_times.len());
    macro_rules! record_up_to {
        ($tev:expr) => {
            while sample_idx < sample_times.len()
                && sample_times[sample_idx] < $tev
                && sample_times[sample_idx] <= t_end
            {
                samples.push((sample_times[sample_idx], state.current(), state.rightmost));
                sample_idx += 1;
            }
        };
    }
    loop {
        let enter_rate = if state.occ[0] == 0 { alpha } else { 0.0 };
        let exit_rate = if state.occ[0] == 1 { gamma } else { 0.0 };
        let fwd_rate = fwd_list.len() as f64;
        let bwd_rate = bwd_list.len() as f64 * q;
        let total = fwd_rate + bwd_rate + enter_rate + exit_rate;
        debug_assert!(total > 0.0);
        t += rng.next_exp(total);
        if t > t_end {
            break;
        }
        record_up_to!(t);
        let mut pick = rng.next_f64() * total;
        if pick < fwd_rate {
            let idx = (pick as usize).min(fwd_list.len() - 1);
            let x = fwd_list[idx] as usize;
            state.occ[x - 1] = 0;
            state.occ[x] = 1;
            if x == state.rightmost {
                state.rightmost = x + 1;
                if state.grow_if_needed()? {
                    fwd_pos.resize(state.window() + 1, sentinel);
                    bwd_pos.resize(state.window() + 1, sentinel);
                }
            }
            refresh_edge!(x - 1);
            refresh_edge!(x);
            refresh_edge!(x + 1);
            continue;
        }
        pick -= fwd_rate;
        if pick < bwd_rate {
            let idx = ((pick / q) as usize).min(bwd_list.len() - 1);
            let x = bwd_list[idx] as usize;
            state.occ[x - 1] = 1;
            state.occ[x] = 0;
            if x + 1 == state.rightmost {
                state.rightmost = x;
            }
            refresh_edge!(x - 1);
            refresh_edge!(x);
            refresh_edge!(x + 1);
            continue;
        }
        pick -= bwd_rate;
        if pick < enter_rate {
            state.do_enter();
        } else {
            state.do_exit();
        }
        refresh_edge!(1);
    }
    record_up_to!(f64::INFINITY);
    Ok(HalfSpaceRun {
        samples,
        final_state: state,
    })
}
