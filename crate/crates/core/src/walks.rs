//! Continuous-time multi-walker systems with R-spread-out steps.
//!
//! All walkers jump at rate 1, so the system is driven by one exponential
//! clock at rate (number of live particles) plus a uniform choice of the
//! particle that moves.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{check_coord, same_dim, BoxIter, Coords, LatticePoint};

/// Uniform law on the punctured l1 ball `B_1(R) \ {0}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepKernel {
    dim: usize,
    range: u32,
    /// Offsets in lexicographic order, flattened with stride `dim`.
    offsets: Vec<i64>,
}

impl StepKernel {
    pub fn new(dim: usize, range: u32) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        if range == 0 {
            return Err(Error::InvalidArgument("range R must be at least 1".into()));
        }
        let r = range as i64;
        let mut offsets = Vec::new();
        for z in BoxIter::centered(&vec![0; dim], r) {
            let l1: i64 = z.iter().map(|c| c.abs()).sum();
            if l1 > 0 && l1 <= r {
                offsets.extend_from_slice(&z);
            }
        }
        Ok(StepKernel { dim, range, offsets })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn range(&self) -> u32 {
        self.range
    }

    pub fn support_len(&self) -> usize {
        self.offsets.len() / self.dim
    }

    pub fn offset(&self, i: usize) -> &[i64] {
        &self.offsets[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.support_len() as f64
    }

    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.random_range(0..self.support_len())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &[i64] {
        self.offset(self.sample_index(rng))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CollisionMode {
    Independent,
    Coalescing,
    Annihilating,
    /// Free motion on `[0, free_period)`; co-located walkers merge at
    /// `free_period` and coalescing rules apply afterwards.
    DelayedCoalescing { free_period: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Jump,
    Coalesce,
    Annihilate,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Jump => "jump",
            EventKind::Coalesce => "coalesce",
            EventKind::Annihilate => "annihilate",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Event {
    pub time: f64,
    /// Representative walker of the particle that jumped.
    pub walker: u32,
    pub step: Coords,
    pub kind: EventKind,
}

/// What one call to [`WalkerSystem::step`] did.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepOutcome {
    Event(EventKind),
    /// The delayed-coalescing switch at the end of the free period.
    DelayedMerge,
    /// The next event would fall after the horizon; the clock sits at the horizon.
    Horizon,
    /// No live particles remain.
    Extinct,
}

const DEAD: u32 = u32::MAX;

/// State of a multi-walker system. A particle is a set of walkers sharing one
/// position (a coalescence class, or a single walker in the other modes).
#[derive(Clone, Debug)]
pub struct WalkerSystem {
    kernel: StepKernel,
    mode: CollisionMode,
    clock: f64,
    origins: Vec<LatticePoint>,
    pos: Vec<LatticePoint>,
    members: Vec<Vec<u32>>,
    rep: Vec<u32>,
    live: Vec<u32>,
    slot: Vec<u32>,
    owner: Vec<u32>,
    occupancy: FxHashMap<LatticePoint, u32>,
    /// Site multiplicities during a delayed-coalescing free period.
    counts: FxHashMap<LatticePoint, u32>,
    interacting: bool,
    jumps: u64,
    coalescences: u64,
    annihilations: u64,
    free_collisions: u64,
    max_disp: Option<Vec<i64>>,
    trace: Vec<(f64, usize)>,
    log: Option<Vec<Event>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SimOptions {
    pub track_displacement: bool,
    pub record_events: bool,
}

impl WalkerSystem {
    pub fn new(initial: &[LatticePoint], kernel: &StepKernel, mode: CollisionMode, opts: SimOptions) -> Result<Self> {
        if initial.is_empty() {
            return Err(Error::Empty("initial walker set"));
        }
        let mut seen = FxHashSet::default();
        for p in initial {
            same_dim(kernel.dim(), p.dim())?;
            if !seen.insert(p) {
                return Err(Error::DuplicateSite(p.to_string()));
            }
        }
        if let CollisionMode::DelayedCoalescing { free_period } = mode {
            if !(free_period >= 0.0) {
                return Err(Error::InvalidArgument(format!("free period {free_period} must be >= 0")));
            }
        }
        let n = initial.len();
        let interacting = matches!(mode, CollisionMode::Coalescing | CollisionMode::Annihilating)
            || matches!(mode, CollisionMode::DelayedCoalescing { free_period } if free_period == 0.0);
        let mut occupancy = FxHashMap::default();
        let mut counts = FxHashMap::default();
        for (i, p) in initial.iter().enumerate() {
            if interacting {
                occupancy.insert(p.clone(), i as u32);
            } else if matches!(mode, CollisionMode::DelayedCoalescing { .. }) {
                counts.insert(p.clone(), 1);
            }
        }
        Ok(WalkerSystem {
            kernel: kernel.clone(),
            mode,
            clock: 0.0,
            origins: initial.to_vec(),
            pos: initial.to_vec(),
            members: (0..n as u32).map(|i| vec![i]).collect(),
            rep: (0..n as u32).collect(),
            live: (0..n as u32).collect(),
            slot: (0..n as u32).collect(),
            owner: (0..n as u32).collect(),
            occupancy,
            counts,
            interacting,
            jumps: 0,
            coalescences: 0,
            annihilations: 0,
            free_collisions: 0,
            max_disp: opts.track_displacement.then(|| vec![0; n]),
            trace: vec![(0.0, n)],
            log: opts.record_events.then(Vec::new),
        })
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn mode(&self) -> CollisionMode {
        self.mode
    }

    pub fn kernel(&self) -> &StepKernel {
        &self.kernel
    }

    pub fn walker_count(&self) -> usize {
        self.origins.len()
    }

    pub fn origins(&self) -> &[LatticePoint] {
        &self.origins
    }

    /// Number of live particles (classes), `N_t`.
    pub fn live_count(&self) -> usize {
        self.live.len()
    }

    pub fn jumps(&self) -> u64 {
        self.jumps
    }

    pub fn coalescences(&self) -> u64 {
        self.coalescences
    }

    pub fn annihilations(&self) -> u64 {
        self.annihilations
    }

    /// Collisions seen during a delayed-coalescing free period (not resolved).
    pub fn free_collisions(&self) -> u64 {
        self.free_collisions
    }

    /// `(time, N_t)` at time 0 and at every change of `N_t`.
    pub fn trace(&self) -> &[(f64, usize)] {
        &self.trace
    }

    pub fn events(&self) -> Option<&[Event]> {
        self.log.as_deref()
    }

    /// Largest l-infinity displacement from the origin seen so far, per walker.
    pub fn max_displacement(&self) -> Option<&[i64]> {
        self.max_disp.as_deref()
    }

    pub fn is_alive(&self, walker: usize) -> bool {
        self.slot[self.owner[walker] as usize] != DEAD
    }

    /// Current position of a walker; `None` once annihilated.
    pub fn position(&self, walker: usize) -> Option<&LatticePoint> {
        let p = self.owner[walker] as usize;
        (self.slot[p] != DEAD).then(|| &self.pos[p])
    }

    /// Representative (lexicographically minimal origin) of each walker's class.
    pub fn class_map(&self) -> Vec<u32> {
        self.owner.iter().map(|&p| self.rep[p as usize]).collect()
    }

    /// Live particles as `(representative walker, position)`.
    pub fn live_particles(&self) -> impl Iterator<Item = (u32, &LatticePoint)> {
        self.live.iter().map(move |&p| (self.rep[p as usize], &self.pos[p as usize]))
    }

    /// Members of the live particle whose representative is `rep`.
    pub fn class_members(&self, walker: usize) -> &[u32] {
        &self.members[self.owner[walker] as usize]
    }

    fn kill(&mut self, p: u32) {
        let s = self.slot[p as usize];
        let last = *self.live.last().unwrap();
        self.live.swap_remove(s as usize);
        if last != p {
            self.slot[last as usize] = s;
        }
        self.slot[p as usize] = DEAD;
    }

    /// Merges particle `b` into `a` (both at the same site); returns the survivor.
    fn merge(&mut self, a: u32, b: u32) -> u32 {
        let (big, small) = if self.members[a as usize].len() >= self.members[b as usize].len() { (a, b) } else { (b, a) };
        let moved = std::mem::take(&mut self.members[small as usize]);
        for &w in &moved {
            self.owner[w as usize] = big;
        }
        self.members[big as usize].extend_from_slice(&moved);
        let (ra, rb) = (self.rep[big as usize], self.rep[small as usize]);
        if self.origins[rb as usize] < self.origins[ra as usize] {
            self.rep[big as usize] = rb;
        }
        self.kill(small);
        self.coalescences += 1;
        big
    }

    fn end_free_period(&mut self) {
        self.interacting = true;
        self.counts.clear();
        let mut order: Vec<u32> = self.live.clone();
        order.sort_unstable();
        for p in order {
            if self.slot[p as usize] == DEAD {
                continue;
            }
            let site = self.pos[p as usize].clone();
            match self.occupancy.get(&site).copied() {
                Some(q) => {
                    let s = self.merge(q, p);
                    self.occupancy.insert(site, s);
                }
                None => {
                    self.occupancy.insert(site, p);
                }
            }
        }
        self.trace.push((self.clock, self.live.len()));
    }

    /// Advances by one event, never past `horizon`.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R, horizon: f64) -> Result<StepOutcome> {
        if self.live.is_empty() {
            return Ok(StepOutcome::Extinct);
        }
        let rate = self.live.len() as f64;
        let dt: f64 = Exp1.sample(rng);
        let next = self.clock + dt / rate;
        if let CollisionMode::DelayedCoalescing { free_period } = self.mode {
            if !self.interacting && next >= free_period && free_period <= horizon {
                // Memorylessness lets the clock restart at the switch time.
                self.clock = free_period;
                self.end_free_period();
                return Ok(StepOutcome::DelayedMerge);
            }
        }
        if next > horizon {
            self.clock = horizon;
            return Ok(StepOutcome::Horizon);
        }
        self.clock = next;
        let p = self.live[rng.random_range(0..self.live.len())];
        let k = self.kernel.sample_index(rng);
        let step = Coords::from_slice(self.kernel.offset(k));
        let from = self.pos[p as usize].clone();
        let mut to = from.clone();
        for (c, &z) in to.coords_mut().iter_mut().zip(&step) {
            *c += z;
            check_coord(*c)?;
        }
        self.jumps += 1;
        if let Some(md) = self.max_disp.as_mut() {
            for &w in &self.members[p as usize] {
                let d = to.dist_inf(&self.origins[w as usize]);
                if d > md[w as usize] {
                    md[w as usize] = d;
                }
            }
        }
        let walker = self.rep[p as usize];
        let mut kind = EventKind::Jump;
        match self.mode {
            CollisionMode::Independent => {}
            CollisionMode::DelayedCoalescing { .. } if !self.interacting => {
                if let Some(c) = self.counts.get_mut(&from) {
                    *c -= 1;
                    if *c == 0 {
                        self.counts.remove(&from);
                    }
                }
                let c = self.counts.entry(to.clone()).or_insert(0);
                if *c > 0 {
                    self.free_collisions += 1;
                }
                *c += 1;
            }
            CollisionMode::Coalescing | CollisionMode::DelayedCoalescing { .. } => {
                self.occupancy.remove(&from);
                match self.occupancy.get(&to).copied() {
                    Some(q) => {
                        let s = self.merge(q, p);
                        self.occupancy.insert(to.clone(), s);
                        kind = EventKind::Coalesce;
                    }
                    None => {
                        self.occupancy.insert(to.clone(), p);
                    }
                }
            }
            CollisionMode::Annihilating => {
                self.occupancy.remove(&from);
                match self.occupancy.remove(&to) {
                    Some(q) => {
                        self.kill(p);
                        self.kill(q);
                        self.annihilations += 1;
                        kind = EventKind::Annihilate;
                    }
                    None => {
                        self.occupancy.insert(to.clone(), p);
                    }
                }
            }
        }
        self.pos[p as usize] = to;
        if kind != EventKind::Jump {
            self.trace.push((self.clock, self.live.len()));
        }
        if let Some(log) = self.log.as_mut() {
            log.push(Event { time: self.clock, walker, step, kind });
        }
        Ok(StepOutcome::Event(kind))
    }

    /// Event log as CSV: `time, walker_id, dx_1..dx_d, event_kind`.
    pub fn write_event_log_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let log = self
            .log
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("event recording was not enabled".into()))?;
        let dx: Vec<String> = (1..=self.kernel.dim()).map(|i| format!("dx_{i}")).collect();
        writeln!(w, "time,walker_id,{},event_kind", dx.join(","))?;
        for e in log {
            let s: Vec<String> = e.step.iter().map(|c| c.to_string()).collect();
            writeln!(w, "{},{},{},{}", e.time, e.walker, s.join(","), e.kind.as_str())?;
        }
        Ok(())
    }
}

pub enum StopRule<'a> {
    Horizon(f64),
    /// Stop once at most one class is left, or at the horizon.
    AllCoalesced { horizon: f64 },
    /// Stop when the predicate returns true (checked after every event) or at the horizon.
    Predicate { horizon: f64, check: Box<dyn FnMut(&WalkerSystem) -> bool + 'a> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Horizon,
    AllCoalesced,
    Predicate,
    Extinct,
}

#[derive(Debug)]
pub struct SystemRun {
    pub system: WalkerSystem,
    pub reason: StopReason,
}

impl SystemRun {
    pub fn class_map(&self) -> Vec<u32> {
        self.system.class_map()
    }

    pub fn trace(&self) -> &[(f64, usize)] {
        self.system.trace()
    }
}

pub fn simulate_system<R: Rng + ?Sized>(
    initial: &[LatticePoint],
    kernel: &StepKernel,
    mode: CollisionMode,
    stop: StopRule<'_>,
    opts: SimOptions,
    rng: &mut R,
) -> Result<SystemRun> {
    let mut sys = WalkerSystem::new(initial, kernel, mode, opts)?;
    let (horizon, mut pred, all) = match stop {
        StopRule::Horizon(h) => (h, None, false),
        StopRule::AllCoalesced { horizon } => (horizon, None, true),
        StopRule::Predicate { horizon, check } => (horizon, Some(check), false),
    };
    if !(horizon >= 0.0) {
        return Err(Error::InvalidArgument(format!("horizon {horizon} must be >= 0")));
    }
    loop {
        if all && sys.live_count() <= 1 {
            return Ok(SystemRun { system: sys, reason: StopReason::AllCoalesced });
        }
        if let Some(p) = pred.as_mut() {
            if p(&sys) {
                return Ok(SystemRun { system: sys, reason: StopReason::Predicate });
            }
        }
        match sys.step(rng, horizon)? {
            StepOutcome::Horizon => return Ok(SystemRun { system: sys, reason: StopReason::Horizon }),
            StepOutcome::Extinct => return Ok(SystemRun { system: sys, reason: StopReason::Extinct }),
            _ => {}
        }
    }
}

/// One event of the coupled coalescing/annihilating run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoupledStep {
    pub time: f64,
    pub coalescing: usize,
    pub annihilating: usize,
    pub included: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoupledTrace {
    pub steps: Vec<CoupledStep>,
    pub initial: usize,
    pub final_coalescing: usize,
    pub final_annihilating: usize,
    pub annihilations: u64,
    pub all_included: bool,
}

/// Coalescing system `X_t` and annihilating system `X'_t` from the same start,
/// driven by one stream of arrows fired at the sites of `X_t`. An annihilating
/// particle at the arrow's tail follows it.
pub fn coupled_coalescing_annihilating<R: Rng + ?Sized>(
    initial: &[LatticePoint],
    kernel: &StepKernel,
    horizon: f64,
    rng: &mut R,
) -> Result<CoupledTrace> {
    if initial.is_empty() {
        return Err(Error::Empty("initial walker set"));
    }
    let mut coal: Vec<LatticePoint> = Vec::with_capacity(initial.len());
    let mut index: FxHashMap<LatticePoint, usize> = FxHashMap::default();
    let mut ann: FxHashSet<LatticePoint> = FxHashSet::default();
    for p in initial {
        same_dim(kernel.dim(), p.dim())?;
        if index.insert(p.clone(), coal.len()).is_some() {
            return Err(Error::DuplicateSite(p.to_string()));
        }
        coal.push(p.clone());
        ann.insert(p.clone());
    }
    let included = |coal_index: &FxHashMap<LatticePoint, usize>, ann: &FxHashSet<LatticePoint>| {
        ann.iter().all(|p| coal_index.contains_key(p))
    };
    let mut steps = Vec::new();
    let mut t = 0.0;
    let mut annihilations = 0u64;
    let mut all_included = included(&index, &ann);
    steps.push(CoupledStep { time: 0.0, coalescing: coal.len(), annihilating: ann.len(), included: all_included });
    loop {
        let dt: f64 = Exp1.sample(rng);
        t += dt / coal.len() as f64;
        if t > horizon {
            break;
        }
        let i = rng.random_range(0..coal.len());
        let x = coal[i].clone();
        let y = x.offset(kernel.sample(rng))?;
        // Coalescing system.
        index.remove(&x);
        coal.swap_remove(i);
        if i < coal.len() {
            index.insert(coal[i].clone(), i);
        }
        if !index.contains_key(&y) {
            index.insert(y.clone(), coal.len());
            coal.push(y.clone());
        }
        // Annihilating system uses the same arrow when occupied at its tail.
        if ann.remove(&x) && !ann.remove(&y) {
            ann.insert(y.clone());
        }
        debug_assert_eq!(ann.len() % 2, initial.len() % 2);
        annihilations = ((initial.len() - ann.len()) / 2) as u64;
        let ok = included(&index, &ann);
        all_included &= ok;
        steps.push(CoupledStep { time: t, coalescing: coal.len(), annihilating: ann.len(), included: ok });
    }
    Ok(CoupledTrace {
        steps,
        initial: initial.len(),
        final_coalescing: coal.len(),
        final_annihilating: ann.len(),
        annihilations,
        all_included,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeetingStatus {
    Met,
    Escaped,
    Horizon,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeetingOutcome {
    pub status: MeetingStatus,
    pub time: f64,
    /// l-infinity separation at the end (0 when met).
    pub final_separation: i64,
}

/// Two independent walks from `x` and `y`, simulated through their difference,
/// which is a rate-2 walk with the same step law. `escape = None` means no
/// escape radius; `horizon = f64::INFINITY` means no time limit.
pub fn pair_meeting<R: Rng + ?Sized>(
    x: &LatticePoint,
    y: &LatticePoint,
    kernel: &StepKernel,
    escape: Option<i64>,
    horizon: f64,
    rng: &mut R,
) -> Result<MeetingOutcome> {
    same_dim(kernel.dim(), x.dim())?;
    same_dim(kernel.dim(), y.dim())?;
    let start = y.sub(x)?;
    if let Some(rho) = escape {
        let sep = start.iter().map(|c| c.abs()).max().unwrap_or(0);
        if rho <= sep {
            return Err(Error::Precondition(format!(
                "escape radius {rho} must exceed the initial separation {sep}"
            )));
        }
    }
    let rho = escape.unwrap_or(i64::MAX);
    Ok(match kernel.dim() {
        1 => diff_walk::<1, R>(&start, kernel, rho, horizon, rng),
        2 => diff_walk::<2, R>(&start, kernel, rho, horizon, rng),
        3 => diff_walk::<3, R>(&start, kernel, rho, horizon, rng),
        4 => diff_walk::<4, R>(&start, kernel, rho, horizon, rng),
        5 => diff_walk::<5, R>(&start, kernel, rho, horizon, rng),
        6 => diff_walk::<6, R>(&start, kernel, rho, horizon, rng),
        d => return Err(Error::InvalidArgument(format!("pair_meeting supports d <= 6, got {d}"))),
    })
}

fn diff_walk<const D: usize, R: Rng + ?Sized>(
    start: &[i64],
    kernel: &StepKernel,
    rho: i64,
    horizon: f64,
    rng: &mut R,
) -> MeetingOutcome {
    let steps: Vec<[i64; D]> = (0..kernel.support_len())
        .map(|i| std::array::from_fn(|a| kernel.offset(i)[a]))
        .collect();
    let mut p: [i64; D] = std::array::from_fn(|a| start[a]);
    let timed = horizon.is_finite();
    let mut t = 0.0;
    let mut n_steps: u64 = 0;
    let k = steps.len();
    let status = loop {
        if p.iter().all(|&c| c == 0) {
            break MeetingStatus::Met;
        }
        if p.iter().any(|&c| c.abs() > rho) {
            break MeetingStatus::Escaped;
        }
        if timed {
            let dt: f64 = Exp1.sample(rng);
            if t + dt / 2.0 > horizon {
                t = horizon;
                break MeetingStatus::Horizon;
            }
            t += dt / 2.0;
        }
        let s = &steps[rng.random_range(0..k)];
        for a in 0..D {
            p[a] += s[a];
        }
        n_steps += 1;
    };
    if !timed {
        t = if n_steps == 0 {
            0.0
        } else {
            Gamma::new(n_steps as f64, 0.5).expect("valid gamma").sample(rng)
        };
    }
    MeetingOutcome { status, time: t, final_separation: p.iter().map(|c| c.abs()).max().unwrap_or(0) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{purpose, stream};

    fn pt(c: &[i64]) -> LatticePoint {
        LatticePoint::new(c).unwrap()
    }

    #[test]
    fn kernel_support() {
        let k = StepKernel::new(3, 1).unwrap();
        assert_eq!(k.support_len(), 6);
        let k = StepKernel::new(2, 2).unwrap();
        assert_eq!(k.support_len(), 12);
        for i in 0..k.support_len() {
            let z = k.offset(i);
            let neg: Vec<i64> = z.iter().map(|c| -c).collect();
            assert!((0..k.support_len()).any(|j| k.offset(j) == neg.as_slice()));
        }
    }

    #[test]
    fn single_walker_keeps_one_class() {
        let k = StepKernel::new(3, 1).unwrap();
        let mut rng = stream(1, purpose::WALKS, 0);
        for mode in [CollisionMode::Coalescing, CollisionMode::Annihilating, CollisionMode::Independent] {
            let run = simulate_system(&[pt(&[0, 0, 0])], &k, mode, StopRule::Horizon(10.0), SimOptions::default(), &mut rng).unwrap();
            assert!(run.trace().iter().all(|&(_, n)| n == 1));
            assert_eq!(run.system.clock(), 10.0);
        }
    }

    #[test]
    fn errors_on_bad_initial() {
        let k = StepKernel::new(2, 1).unwrap();
        let mut rng = stream(1, purpose::WALKS, 0);
        let dup = [pt(&[0, 0]), pt(&[0, 0])];
        assert!(simulate_system(&dup, &k, CollisionMode::Coalescing, StopRule::Horizon(1.0), SimOptions::default(), &mut rng).is_err());
        assert!(simulate_system(&[], &k, CollisionMode::Coalescing, StopRule::Horizon(1.0), SimOptions::default(), &mut rng).is_err());
    }

    #[test]
    fn meeting_at_zero_separation() {
        let k = StepKernel::new(3, 1).unwrap();
        let mut rng = stream(1, purpose::WALKS, 0);
        let o = pair_meeting(&pt(&[1, 1, 1]), &pt(&[1, 1, 1]), &k, Some(4), f64::INFINITY, &mut rng).unwrap();
        assert_eq!(o.status, MeetingStatus::Met);
        assert_eq!(o.time, 0.0);
    }

    #[test]
    fn delayed_mode_merges_at_switch() {
        let k = StepKernel::new(1, 1).unwrap();
        let start: Vec<LatticePoint> = (0..6).map(|i| pt(&[i])).collect();
        let mut rng = stream(3, purpose::WALKS, 0);
        let mode = CollisionMode::DelayedCoalescing { free_period: 5.0 };
        let run = simulate_system(&start, &k, mode, StopRule::Horizon(5.0), SimOptions::default(), &mut rng).unwrap();
        let sys = &run.system;
        let mut sites = FxHashSet::default();
        for (_, p) in sys.live_particles() {
            assert!(sites.insert(p.clone()));
        }
        for w in 0..6 {
            let rep = sys.class_map()[w] as usize;
            assert_eq!(sys.position(w), sys.position(rep));
        }
    }
}
