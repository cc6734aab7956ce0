//! Shared test support: fixture loading, random LEG nets drawn from a global
//! joint, and brute-force oracles computed directly from cell arrays without
//! going through the library's own marginalization or update code.

use std::path::PathBuf;

use gbi_core::{
    CausalLink, Cmd, EventId, EvidenceSpec, Leg, LegNet, LoadedKb, Session, TouchedLeg, UpdateRecord,
};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

pub use rand_chacha::ChaCha8Rng;
pub use rand::SeedableRng;

pub const ACCIDENT: &str = "accident.json";
pub const TICKET_CHAIN: &str = "ticket_chain.json";

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn fixture_text(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap_or_else(|e| panic!("reading fixture {name}: {e}"))
}

pub fn load_fixture(name: &str) -> LoadedKb {
    gbi_core::load_net(&fixture_text(name)).unwrap_or_else(|e| panic!("loading fixture {name}: {e}"))
}

pub fn fixture_session(name: &str) -> Session {
    let kb = load_fixture(name);
    Session::with_links(kb.net, kb.causal_links).expect("fixture links are valid")
}

pub fn ev(names: &[&str]) -> Vec<EventId> {
    names.iter().map(|s| EventId::from(*s)).collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Flat Dirichlet draw of `n` cells. With `zero_prob > 0` some cells are
/// forced to zero (at least one stays positive).
pub fn random_cells(rng: &mut impl Rng, n: usize, zero_prob: f64) -> Vec<f64> {
    let mut cells: Vec<f64> = (0..n)
        .map(|_| {
            if zero_prob > 0.0 && rng.random::<f64>() < zero_prob {
                0.0
            } else {
                -(1.0 - rng.random::<f64>()).ln()
            }
        })
        .collect();
    if cells.iter().all(|&c| c == 0.0) {
        let i = rng.random_range(0..n);
        cells[i] = 1.0;
    }
    let total: f64 = cells.iter().sum();
    cells.iter_mut().for_each(|c| *c /= total);
    cells
}

pub fn random_cmd(rng: &mut impl Rng, events: &[EventId], zero_prob: f64) -> Cmd {
    Cmd::new(events.to_vec(), random_cells(rng, 1 << events.len(), zero_prob)).expect("random table is valid")
}

/// Sum of the cells of `cells` (little-endian over `events`) where every
/// listed event has the given value.
pub fn brute_prob(events: &[EventId], cells: &[f64], fixed: &[(&EventId, bool)]) -> f64 {
    let bits: Vec<(usize, bool)> = fixed
        .iter()
        .map(|(e, v)| (events.iter().position(|x| x == *e).expect("event in table"), *v))
        .collect();
    cells
        .iter()
        .enumerate()
        .filter(|(i, _)| bits.iter().all(|&(b, v)| ((i >> b) & 1 == 1) == v))
        .map(|(_, c)| c)
        .sum()
}

/// Effect measure recomputed from raw cells.
pub fn brute_effect(before: &Cmd, after: &Cmd, h: &EventId, e: &EventId) -> f64 {
    let p = |c: &Cmd, f: &[(&EventId, bool)]| brute_prob(c.events(), c.cells(), f);
    let cov = p(before, &[(h, true), (e, true)]) - p(before, &[(h, true)]) * p(before, &[(e, true)]);
    let dh = p(after, &[(h, true)]) - p(before, &[(h, true)]);
    let de = p(after, &[(e, true)]) - p(before, &[(e, true)]);
    cov * dh * de
}

/// `D(q || p)` in nats; infinite when `q` puts mass where `p` has none.
pub fn brute_kl(q: &[f64], p: &[f64]) -> f64 {
    q.iter()
        .zip(p)
        .map(|(&qi, &pi)| {
            if qi <= 0.0 {
                0.0
            } else if pi <= 0.0 {
                f64::INFINITY
            } else {
                qi * (qi / pi).ln()
            }
        })
        .sum()
}

/// Smallest KL divergence to `prior` (a 2-event table) over an
/// `n x n` grid of the two free conditionals, among tables whose event at
/// position `constrained` has probability `target`.
pub fn kl_grid_min(prior: &Cmd, constrained: usize, target: f64, n: usize) -> f64 {
    assert_eq!(prior.events().len(), 2);
    let c_bit = 1usize << constrained;
    let o_bit = 1usize << (1 - constrained);
    let mut best = f64::INFINITY;
    for i in 0..n {
        let u = i as f64 / (n - 1) as f64;
        for j in 0..n {
            let v = j as f64 / (n - 1) as f64;
            // u = P(other | constrained), v = P(other | not constrained)
            let mut q = [0.0; 4];
            q[c_bit | o_bit] = target * u;
            q[c_bit] = target * (1.0 - u);
            q[o_bit] = (1.0 - target) * v;
            q[0] = (1.0 - target) * (1.0 - v);
            best = best.min(brute_kl(&q, prior.cells()));
        }
    }
    best
}

/// Joint distribution over every event of a problem.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalJoint {
    pub events: Vec<EventId>,
    pub cells: Vec<f64>,
}

impl GlobalJoint {
    pub fn random(rng: &mut impl Rng, events: Vec<EventId>) -> Self {
        let cells = random_cells(rng, 1 << events.len(), 0.0);
        GlobalJoint { events, cells }
    }

    fn position(&self, e: &EventId) -> usize {
        self.events.iter().position(|x| x == e).expect("event in joint")
    }

    pub fn marginal(&self, subset: &[EventId]) -> Cmd {
        let pos: Vec<usize> = subset.iter().map(|e| self.position(e)).collect();
        let mut cells = vec![0.0; 1 << subset.len()];
        for (i, &c) in self.cells.iter().enumerate() {
            let j = pos
                .iter()
                .enumerate()
                .fold(0, |acc, (k, &p)| acc | (((i >> p) & 1) << k));
            cells[j] += c;
        }
        Cmd::new(subset.to_vec(), cells).expect("marginal is normalized")
    }

    pub fn prob_true(&self, e: &EventId) -> f64 {
        brute_prob(&self.events, &self.cells, &[(e, true)])
    }

    /// Iterative proportional fitting of single-event targets on the full
    /// joint.
    pub fn fit(&self, targets: &[(EventId, f64)], sweeps: usize) -> GlobalJoint {
        let mut cells = self.cells.clone();
        for _ in 0..sweeps {
            for (e, t) in targets {
                let bit = 1usize << self.position(e);
                let on: f64 = cells.iter().enumerate().filter(|(i, _)| i & bit != 0).map(|(_, c)| c).sum();
                let off = 1.0 - on;
                for (i, c) in cells.iter_mut().enumerate() {
                    if i & bit != 0 {
                        *c *= if on > 0.0 { t / on } else { 0.0 };
                    } else {
                        *c *= if off > 0.0 { (1.0 - t) / off } else { 0.0 };
                    }
                }
            }
        }
        GlobalJoint {
            events: self.events.clone(),
            cells,
        }
    }
}

/// The joint that factorizes along the LEG tree: product of LEG tables over
/// product of separator marginals.
pub fn markov_joint(net: &LegNet) -> GlobalJoint {
    let events = net.events().to_vec();
    let pos = |e: &EventId| events.iter().position(|x| x == e).unwrap();
    let project = |i: usize, sub: &[EventId]| {
        sub.iter()
            .enumerate()
            .fold(0usize, |acc, (k, e)| acc | (((i >> pos(e)) & 1) << k))
    };
    let mut seps: Vec<(Vec<EventId>, Vec<f64>)> = Vec::new();
    for a in 0..net.legs().len() {
        for &b in net.neighbors(a) {
            if b < a {
                continue;
            }
            let la = &net.legs()[a].cmd;
            let shared: Vec<EventId> = la
                .events()
                .iter()
                .filter(|e| net.legs()[b].cmd.contains(e))
                .cloned()
                .collect();
            let mut cells = vec![0.0; 1 << shared.len()];
            for (i, &c) in la.cells().iter().enumerate() {
                let j = shared.iter().enumerate().fold(0usize, |acc, (k, e)| {
                    let p = la.events().iter().position(|x| x == e).unwrap();
                    acc | (((i >> p) & 1) << k)
                });
                cells[j] += c;
            }
            seps.push((shared, cells));
        }
    }
    let mut cells = vec![0.0; 1 << events.len()];
    for (i, cell) in cells.iter_mut().enumerate() {
        let mut p = 1.0;
        for leg in net.legs() {
            p *= leg.cmd.cells()[project(i, leg.cmd.events())];
        }
        for (shared, sep) in &seps {
            let s = sep[project(i, shared)];
            p = if s > 0.0 { p / s } else { 0.0 };
        }
        *cell = p;
    }
    GlobalJoint { events, cells }
}

/// Shape of a random tree net.
#[derive(Debug, Clone, Copy)]
pub struct TreeShape {
    pub min_legs: usize,
    pub max_legs: usize,
    pub max_leg_events: usize,
    pub max_events: usize,
}

impl Default for TreeShape {
    fn default() -> Self {
        TreeShape {
            min_legs: 3,
            max_legs: 8,
            max_leg_events: 4,
            max_events: 12,
        }
    }
}

/// Random tree-shaped LEG net whose tables are marginals of one random
/// global joint, so the net is consistent. Every event lies in at most two
/// LEGs and every LEG has at least two events.
pub fn random_tree_net(rng: &mut impl Rng, shape: TreeShape) -> (LegNet, GlobalJoint) {
    let n_legs = rng.random_range(shape.min_legs..=shape.max_legs);
    let mut next = 0usize;
    let fresh = |count: usize, next: &mut usize| -> Vec<EventId> {
        (0..count)
            .map(|_| {
                *next += 1;
                EventId::new(format!("E{}", *next - 1))
            })
            .collect()
    };
    let mut uses: Vec<usize> = Vec::new();
    let mut legs: Vec<Vec<EventId>> = Vec::new();
    let first = rng.random_range(2..=shape.max_leg_events.min(shape.max_events - (n_legs - 1)).max(2));
    legs.push(fresh(first, &mut next));
    uses.extend(std::iter::repeat_n(1, first));

    while legs.len() < n_legs {
        // parents with an event still used only once
        let parents: Vec<usize> = (0..legs.len())
            .filter(|&l| legs[l].iter().any(|e| uses[idx(e)] == 1))
            .collect();
        let Some(&parent) = parents.choose(rng) else {
            break;
        };
        let mut open: Vec<EventId> = legs[parent].iter().filter(|e| uses[idx(e)] == 1).cloned().collect();
        open.shuffle(rng);
        let n_shared = rng.random_range(1..=open.len().min(2).min(shape.max_leg_events - 1));
        // every LEG brings a fresh event; keep one per LEG still to come
        let still_to_come = n_legs - legs.len() - 1;
        let budget = shape.max_events.saturating_sub(next + still_to_come);
        let max_fresh = (shape.max_leg_events - n_shared).min(budget);
        if max_fresh == 0 {
            break;
        }
        let n_fresh = rng.random_range(1..=max_fresh);
        let mut leg: Vec<EventId> = open[..n_shared].to_vec();
        for e in &leg {
            uses[idx(e)] += 1;
        }
        let new = fresh(n_fresh, &mut next);
        uses.extend(std::iter::repeat_n(1, n_fresh));
        leg.extend(new);
        leg.shuffle(rng);
        legs.push(leg);
    }

    let events: Vec<EventId> = (0..next).map(|i| EventId::new(format!("E{i}"))).collect();
    let joint = GlobalJoint::random(rng, events.clone());
    let legs = legs
        .into_iter()
        .enumerate()
        .map(|(i, evs)| Leg::new(format!("L{i}"), joint.marginal(&evs)))
        .collect();
    let net = LegNet::new(events, legs).expect("generated net is a consistent tree");
    (net, joint)
}

fn idx(e: &EventId) -> usize {
    e.as_str()[1..].parse().expect("generated event name")
}

/// Random soft evidence on one or two events of a random LEG, with targets
/// kept away from 0 and 1.
pub fn random_evidence(rng: &mut impl Rng, net: &LegNet) -> EvidenceSpec {
    let leg = &net.legs()[rng.random_range(0..net.legs().len())];
    let mut events = leg.events().to_vec();
    events.shuffle(rng);
    let k = rng.random_range(1..=events.len().min(2));
    events[..k]
        .iter()
        .fold(EvidenceSpec::new(leg.id.clone()), |spec, e| {
            spec.with(e.clone(), rng.random_range(0.05..0.95))
        })
}

/// Two-event table over `[a, b]` with the given marginals and joint mass.
pub fn pair_cmd(a: &str, b: &str, pa: f64, pb: f64, pab: f64) -> Cmd {
    Cmd::new(ev(&[a, b]), vec![1.0 - pa - pb + pab, pa - pab, pb - pab, pab]).expect("valid pair table")
}

fn touched(leg: &str, before: Cmd, after: Cmd) -> TouchedLeg {
    TouchedLeg {
        leg: leg.to_owned(),
        before,
        after,
    }
}

/// Table over `[DRIVER-GETS-A-TICKET, DRIVER-IMPAIRED, CAR-IMPAIRED]` with
/// independent DRIVER-IMPAIRED and CAR-IMPAIRED and the ticket conditional
/// `h[di][ci]`.
fn ticket_table(p_di: f64, p_ci: f64, h: [[f64; 2]; 2]) -> Cmd {
    let mut cells = vec![0.0; 8];
    for (di, row) in h.iter().enumerate() {
        for (ci, &p_ticket) in row.iter().enumerate() {
            let w = if di == 1 { p_di } else { 1.0 - p_di } * if ci == 1 { p_ci } else { 1.0 - p_ci };
            let base = (di << 1) | (ci << 2);
            cells[base | 1] = w * p_ticket;
            cells[base] = w * (1.0 - p_ticket);
        }
    }
    Cmd::new(ev(&["DRIVER-GETS-A-TICKET", "DRIVER-IMPAIRED", "CAR-IMPAIRED"]), cells).expect("valid ticket table")
}

/// Two recorded updates whose ticket-LEG snapshots carry the values of the
/// two-update historical example: ticket 0.05 -> 0.15 -> 0.35, with
/// CAR-IMPAIRED 0.05 -> 0.60 (correlation 0.73) and then DRIVER-IMPAIRED
/// 0.02 -> 0.40 (correlation 0.80).
pub fn historical_session() -> Session {
    let h00_0 = (0.05 - 0.039 - 0.02 * 0.95 * 0.2) / (0.98 * 0.95);
    let t0 = ticket_table(0.02, 0.05, [[h00_0, 0.78], [0.2, 0.78]]);
    let h00_1 = (0.15 - 0.019 - 0.98 * 0.6 * 0.2) / (0.98 * 0.4);
    let t1 = ticket_table(0.02, 0.60, [[h00_1, 0.2], [0.95, 0.95]]);
    let t2 = ticket_table(0.40, 0.60, [[0.35, 0.35], [0.35, 0.35]]);

    let uniform = |names: &[&str]| Cmd::uniform(ev(names)).unwrap();
    let net = LegNet::new_unchecked_consistency(
        ev(&[
            "DRIVER-GETS-A-TICKET",
            "DRIVER-IMPAIRED",
            "CAR-IMPAIRED",
            "ILLEGAL-EQUIPMENT",
            "DRUNK",
        ]),
        vec![
            Leg::new("DRIVER-GETS-A-TICKET-LEG", t0.clone()),
            Leg::new("CAR-IMPAIRED-LEG", uniform(&["CAR-IMPAIRED", "ILLEGAL-EQUIPMENT"])),
            Leg::new("DRUNK-LEG", uniform(&["DRUNK", "DRIVER-IMPAIRED"])),
        ],
    )
    .expect("historical net");
    let history = vec![
        UpdateRecord {
            index: 1,
            evidence: EvidenceSpec::new("CAR-IMPAIRED-LEG").with("ILLEGAL-EQUIPMENT", 1.0),
            touched: vec![touched("DRIVER-GETS-A-TICKET-LEG", t0, t1.clone())],
            propagation_order: vec!["CAR-IMPAIRED-LEG".into(), "DRIVER-GETS-A-TICKET-LEG".into()],
        },
        UpdateRecord {
            index: 2,
            evidence: EvidenceSpec::new("DRUNK-LEG").with("DRUNK", 1.0),
            touched: vec![touched("DRIVER-GETS-A-TICKET-LEG", t1, t2)],
            propagation_order: vec!["DRUNK-LEG".into(), "DRIVER-GETS-A-TICKET-LEG".into()],
        },
    ];
    let mut session = Session::from_recorded(net, history).expect("historical snapshots are continuous");
    session
        .set_causal_links(vec![
            CausalLink::new("DRIVER-IMPAIRED", "DRIVER-GETS-A-TICKET"),
            CausalLink::new("CAR-IMPAIRED", "DRIVER-GETS-A-TICKET"),
        ])
        .expect("historical links");
    session
}

/// One recorded update whose snapshots carry the values of the causal-chain
/// example: MORE-DRINKS observed in DRUNK-LEG, raising DRUNK, then
/// DRIVER-IMPAIRED, then DRIVER-GETS-A-TICKET. These target values cannot
/// come from one consistent net, so the tables are injected.
pub fn global_session() -> Session {
    let drunk_before = Cmd::new(ev(&["MORE-DRINKS", "DRUNK"]), vec![0.895, 0.005, 0.005, 0.095]).unwrap();
    let drunk_after = Cmd::new(ev(&["MORE-DRINKS", "DRUNK"]), vec![0.0, 0.05, 0.0, 0.95]).unwrap();
    let impaired_before = pair_cmd("DRUNK", "DRIVER-IMPAIRED", 0.01, 0.04, 0.0084);
    let impaired_after = Cmd::new(ev(&["DRUNK", "DRIVER-IMPAIRED"]), vec![0.34, 0.01, 0.41, 0.24]).unwrap();
    let ticket_before = pair_cmd("DRIVER-IMPAIRED", "DRIVER-GETS-A-TICKET", 0.04, 0.05, 0.0312);
    let ticket_after =
        Cmd::new(ev(&["DRIVER-IMPAIRED", "DRIVER-GETS-A-TICKET"]), vec![0.15, 0.05, 0.2, 0.6]).unwrap();

    let net = LegNet::new_unchecked_consistency(
        ev(&["MORE-DRINKS", "DRUNK", "DRIVER-IMPAIRED", "DRIVER-GETS-A-TICKET"]),
        vec![
            Leg::new("DRUNK-LEG", drunk_before.clone()),
            Leg::new("DRIVER-IMPAIRED-LEG", impaired_before.clone()),
            Leg::new("DRIVER-GETS-A-TICKET-LEG", ticket_before.clone()),
        ],
    )
    .expect("chain net");
    let history = vec![UpdateRecord {
        index: 1,
        evidence: EvidenceSpec::new("DRUNK-LEG").with("MORE-DRINKS", 1.0),
        touched: vec![
            touched("DRUNK-LEG", drunk_before, drunk_after),
            touched("DRIVER-IMPAIRED-LEG", impaired_before, impaired_after),
            touched("DRIVER-GETS-A-TICKET-LEG", ticket_before, ticket_after),
        ],
        propagation_order: vec![
            "DRUNK-LEG".into(),
            "DRIVER-IMPAIRED-LEG".into(),
            "DRIVER-GETS-A-TICKET-LEG".into(),
        ],
    }];
    let mut session = Session::from_recorded(net, history).expect("chain snapshots are continuous");
    session
        .set_causal_links(vec![
            CausalLink::new("MORE-DRINKS", "DRUNK"),
            CausalLink::new("DRUNK", "DRIVER-IMPAIRED"),
            CausalLink::new("DRIVER-IMPAIRED", "DRIVER-GETS-A-TICKET"),
        ])
        .expect("chain links");
    session
}

/// Two-update consultation on the ticket-chain fixture: a car inspection
/// that leaves the ticket untouched, then NO-DRINKS observed.
pub fn ticket_chain_consultation() -> Session {
    let mut session = fixture_session(TICKET_CHAIN);
    session
        .apply_evidence(
            &EvidenceSpec::new("CAR-IMPAIRED-LEG")
                .with("PASSED-INSPECTION", 1.0)
                .with("ILLEGAL-EQUIPMENT", 0.0),
        )
        .expect("inspection update");
    session
        .apply_evidence(&EvidenceSpec::new("DRUNK-LEG").with("NO-DRINKS", 1.0))
        .expect("drinks update");
    session
}
