//! Single-replication event loop.
//!
//! The server moves clockwise at speed 1/α whenever it is not serving, so
//! the three event kinds are batch arrivals, service completions, and
//! reaching the next stop (a waiting customer or the depot). Stops are
//! re-resolved from scratch after every event, which makes mid-travel
//! arrivals under the exhaustive discipline retarget the server at no
//! extra bookkeeping cost. At equal timestamps a completion is processed
//! before a crossing and a crossing before an arrival; a customer located
//! exactly at the server's position is treated as ahead by zero distance
//! and served immediately, except that a customer exactly at the depot is
//! served just after the crossing so no cycle boundary is lost.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::model::{circle_distance, fold_position, SystemParameters};
use crate::policy::Policy;

use super::{ProbeMetric, SimulationConfig, TraceEvent, TraceKind};

/// Per-replication measurement sums; replication means are formed by the
/// caller so that aggregation order stays fixed.
#[derive(Debug, Default, Clone)]
pub(crate) struct RepOutcome {
    pub sojourn_sum: f64,
    pub sojourn_n: u64,
    pub delivery_sum: f64,
    pub delivery_n: u64,
    pub waiting_area: f64,
    pub serving_time: f64,
    pub window_len: f64,
    pub cycle_sum: f64,
    pub cycle_sq_sum: f64,
    pub cycle_n: u64,
    pub probe_sum: f64,
    pub probe_n: u64,
}

struct BatchRec {
    arrival: f64,
    remaining: u32,
    measured: bool,
}

enum Phase {
    Travel,
    Serve { end: f64, batch: usize },
}

type WaitingMap = BTreeMap<u64, Vec<usize>>;

struct Trace {
    cap: usize,
    rows: Vec<TraceEvent>,
}

struct Engine<'a> {
    params: &'a SystemParameters,
    policy: Policy,
    rng: ChaCha12Rng,
    probe: Option<(ProbeMetric, f64)>,
    warmup: u64,
    measured_span: u64,

    now: f64,
    pos: f64,
    phase: Phase,
    next_arrival: f64,
    last_crossing: f64,

    /// Customers the server may serve now (all waiting customers under the
    /// exhaustive discipline; the gate snapshot under globally gated).
    eligible: WaitingMap,
    /// Customers behind the gate (globally gated only).
    pending: WaitingMap,
    batches: Vec<BatchRec>,
    awaiting_delivery: Vec<usize>,

    arrivals_seen: u64,
    delivered_measured: u64,
    waiting_count: u64,
    last_stats_time: f64,
    window_start: Option<f64>,
    window_end: Option<f64>,

    trace: Option<Trace>,
    out: RepOutcome,
}

fn pos_key(pos: f64) -> u64 {
    pos.to_bits()
}

impl<'a> Engine<'a> {
    fn new(config: &'a SimulationConfig, replication: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
        rng.set_stream(replication + 1);
        let mut engine = Engine {
            params: &config.params,
            policy: config.policy,
            rng,
            probe: None,
            warmup: config.warmup_batches,
            measured_span: config.measured_batches,
            now: 0.0,
            pos: 0.0,
            phase: Phase::Travel,
            next_arrival: 0.0,
            last_crossing: 0.0,
            eligible: BTreeMap::new(),
            pending: BTreeMap::new(),
            batches: Vec::new(),
            awaiting_delivery: Vec::new(),
            arrivals_seen: 0,
            delivered_measured: 0,
            waiting_count: 0,
            last_stats_time: 0.0,
            window_start: None,
            window_end: None,
            trace: None,
            out: RepOutcome::default(),
        };
        engine.next_arrival = engine.draw_interarrival();
        engine
    }

    fn draw_interarrival(&mut self) -> f64 {
        let u: f64 = self.rng.gen();
        self.now - (1.0 - u).ln() / self.params.lambda
    }

    /// Appends a trace row when tracing is on and the cap is not yet hit.
    /// The position column is the server's location at the event instant.
    fn record(&mut self, time: f64, kind: TraceKind, batch: Option<u64>) {
        if let Some(trace) = &mut self.trace {
            if trace.rows.len() < trace.cap {
                trace.rows.push(TraceEvent {
                    time,
                    kind,
                    position: self.pos,
                    batch,
                });
            }
        }
    }

    /// Advances the time-average accumulators to `t`, clipping to the
    /// measurement window. Must run before any state change at `t`.
    fn advance_stats(&mut self, t: f64, serving: bool) {
        if let Some(start) = self.window_start {
            let end = self.window_end.unwrap_or(f64::INFINITY);
            let lo = self.last_stats_time.max(start);
            let hi = t.min(end);
            if hi > lo {
                self.out.waiting_area += self.waiting_count as f64 * (hi - lo);
                if serving {
                    self.out.serving_time += hi - lo;
                }
            }
        }
        self.last_stats_time = t;
    }

    /// Position of the (traveling) server at time `t`.
    fn position_at(&self, t: f64) -> f64 {
        fold_position(self.pos + (t - self.now) / self.params.alpha)
    }

    fn next_stop(&self) -> (f64, Option<u64>) {
        let to_depot = if self.pos > 0.0 { 1.0 - self.pos } else { 1.0 };
        let candidate = self
            .eligible
            .range(pos_key(self.pos)..)
            .next()
            .or_else(|| self.eligible.iter().next())
            .map(|(&bits, _)| bits);
        if let Some(bits) = candidate {
            let cust_pos = f64::from_bits(bits);
            let dist = circle_distance(self.pos, cust_pos);
            if dist < to_depot {
                return (self.now + self.params.alpha * dist, Some(bits));
            }
        }
        (self.now + self.params.alpha * to_depot, None)
    }

    fn handle_arrival(&mut self) {
        let t = self.next_arrival;
        self.advance_stats(t, matches!(self.phase, Phase::Serve { .. }));
        if let Phase::Travel = self.phase {
            self.pos = self.position_at(t);
        }
        self.now = t;
        self.arrivals_seen += 1;
        if self.arrivals_seen == self.warmup + 1 {
            self.window_start = Some(t);
        }
        if self.arrivals_seen == self.warmup + self.measured_span + 1 {
            self.window_end = Some(t);
        }
        let measured = self.arrivals_seen > self.warmup
            && self.arrivals_seen <= self.warmup + self.measured_span;

        let u: f64 = self.rng.gen();
        let k = self.params.batch.sample(u);
        let batch_idx = self.batches.len();
        self.record(t, TraceKind::Arrival, Some(batch_idx as u64));
        self.batches.push(BatchRec {
            arrival: t,
            remaining: k as u32,
            measured,
        });
        for _ in 0..k {
            let u: f64 = self.rng.gen();
            let cust_pos = self.params.location.sample(u);
            let map = match self.policy {
                Policy::Exhaustive => &mut self.eligible,
                Policy::GloballyGated => &mut self.pending,
            };
            map.entry(pos_key(cust_pos)).or_default().push(batch_idx);
        }
        self.waiting_count += k as u64;
        self.next_arrival = self.draw_interarrival();
    }

    fn start_service(&mut self, bits: u64, t: f64) {
        self.advance_stats(t, false);
        self.now = t;
        self.pos = f64::from_bits(bits);
        let entry = self.eligible.get_mut(&bits).expect("customer present");
        let batch_idx = entry.remove(0);
        if entry.is_empty() {
            self.eligible.remove(&bits);
        }
        if self.policy == Policy::GloballyGated {
            assert!(
                self.batches[batch_idx].arrival <= self.last_crossing,
                "gate violation: serving a customer that arrived after the snapshot"
            );
        }
        self.waiting_count -= 1;
        self.record(t, TraceKind::ServiceStart, Some(batch_idx as u64));
        let u: f64 = self.rng.gen();
        let duration = self.params.service.quantile(u);
        self.phase = Phase::Serve {
            end: t + duration,
            batch: batch_idx,
        };
    }

    fn finish_service(&mut self, end: f64, batch_idx: usize) {
        self.advance_stats(end, true);
        self.now = end;
        self.phase = Phase::Travel;
        self.record(end, TraceKind::ServiceCompletion, Some(batch_idx as u64));
        let rec = &mut self.batches[batch_idx];
        rec.remaining -= 1;
        if rec.remaining == 0 && rec.measured {
            let sojourn = end - rec.arrival;
            self.out.sojourn_sum += sojourn;
            self.out.sojourn_n += 1;
            if let Some((ProbeMetric::Sojourn, omega)) = self.probe {
                self.out.probe_sum += (-omega * sojourn).exp();
                self.out.probe_n += 1;
            }
            self.awaiting_delivery.push(batch_idx);
        }
    }

    fn handle_crossing(&mut self, t: f64) {
        self.advance_stats(t, false);
        self.now = t;
        self.pos = 0.0;
        self.record(t, TraceKind::DepotCrossing, None);
        let cycle = t - self.last_crossing;
        let started_in_window = self
            .window_start
            .is_some_and(|s| self.last_crossing >= s)
            && self.window_end.is_none_or(|e| self.last_crossing < e);
        if started_in_window {
            self.out.cycle_sum += cycle;
            self.out.cycle_sq_sum += cycle * cycle;
            self.out.cycle_n += 1;
            if let Some((ProbeMetric::Cycle, omega)) = self.probe {
                self.out.probe_sum += (-omega * cycle).exp();
                self.out.probe_n += 1;
            }
        }
        self.last_crossing = t;

        for batch_idx in self.awaiting_delivery.drain(..) {
            let delivery = t - self.batches[batch_idx].arrival;
            self.out.delivery_sum += delivery;
            self.out.delivery_n += 1;
            self.delivered_measured += 1;
            if let Some((ProbeMetric::Delivery, omega)) = self.probe {
                self.out.probe_sum += (-omega * delivery).exp();
                self.out.probe_n += 1;
            }
        }

        if self.policy == Policy::GloballyGated {
            assert!(
                self.eligible.is_empty(),
                "globally gated cycle ended with unserved snapshot customers"
            );
            self.eligible = std::mem::take(&mut self.pending);
        }
    }

    fn run(&mut self) {
        loop {
            if self.window_end.is_some() && self.delivered_measured >= self.measured_span {
                break;
            }
            match self.phase {
                Phase::Serve { end, batch } => {
                    if self.next_arrival < end {
                        self.handle_arrival();
                    } else {
                        self.finish_service(end, batch);
                    }
                }
                Phase::Travel => {
                    let (t_stop, stop) = self.next_stop();
                    if self.next_arrival < t_stop {
                        self.handle_arrival();
                    } else {
                        match stop {
                            Some(bits) => self.start_service(bits, t_stop),
                            None => self.handle_crossing(t_stop),
                        }
                    }
                }
            }
        }
        let start = self.window_start.expect("window opened");
        let end = self.window_end.expect("window closed");
        self.out.window_len = end - start;
    }
}

pub(crate) fn run_replication(
    config: &SimulationConfig,
    replication: u64,
    probe: Option<(ProbeMetric, f64)>,
) -> RepOutcome {
    let mut engine = Engine::new(config, replication);
    engine.probe = probe;
    engine.run();
    std::mem::take(&mut engine.out)
}

/// Runs replication 0 with event recording switched on and returns the
/// recorded rows; the measurement outcome itself is discarded.
pub(crate) fn run_traced(config: &SimulationConfig, cap: usize) -> Vec<TraceEvent> {
    let mut engine = Engine::new(config, 0);
    engine.trace = Some(Trace {
        cap,
        rows: Vec::new(),
    });
    engine.run();
    engine.trace.take().map(|t| t.rows).unwrap_or_default()
}
