//! The rule-selection search: one [`Search`] over a cursor that walks the
//! sum-side tasks, the move to the product side, then the product-side
//! tasks. Every choice is a precomputed transition, so undo is a snapshot
//! restore.

use std::collections::BTreeMap;

use crate::backtrack::Search;
use crate::cone::ConeFrame;
use crate::constraints::ConstraintNode;
use crate::expr::{AffineExpr, VarId, VarTable};
use crate::qalg::{BracketFraction, QBinomial, SquareBracket};
use crate::trace::{Orientation, ProofStep, ResidualFactor, RuleKind, Side, TraceState};

use super::Mode;

/// Widest constant gap `[e]/[e+j]` turned into residual factors.
const MAX_RESIDUAL_SPAN: i64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stage {
    Lhs(usize),
    Move,
    Rhs(usize),
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Orient,
    Rule1,
    Rule2,
    Rule3,
    Pairwise,
    Residual,
    Constants,
}

#[derive(Debug, Clone)]
pub(crate) struct Cursor {
    stage: Stage,
    var: usize,
    phase: Phase,
    orientation: Orientation,
    /// Key of the last rule applied in the current phase.
    last_key: Option<Vec<SquareBracket>>,
}

impl Cursor {
    fn at(stage: Stage, phase: Phase) -> Self {
        Cursor { stage, var: 0, phase, orientation: Orientation::Numerator, last_key: None }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Node {
    pub state: TraceState,
    pub frame: ConeFrame,
    pub steps: Vec<ProofStep>,
    cursor: Cursor,
    rhs_steps: Vec<u32>,
}

#[derive(Debug, Clone)]
pub(crate) struct Transition {
    step: Option<ProofStep>,
    frame: ConeFrame,
    cursor: Cursor,
    rhs_steps: Option<Vec<u32>>,
}

pub(crate) struct AssemblySearch {
    mode: Mode,
    summation: VarId,
    params: Vec<VarId>,
    lhs_steps: Vec<u32>,
    node: Node,
}

/// A finished assembly: both sides free of brackets.
#[derive(Debug, Clone)]
pub(crate) struct Assembled {
    pub state: TraceState,
    pub frame: ConeFrame,
    pub steps: Vec<ProofStep>,
}

struct Candidate {
    key: Vec<SquareBracket>,
    rule: RuleKind,
    before: BracketFraction,
    after: BracketFraction,
    binomial: Option<QBinomial>,
    guard: Option<AffineExpr>,
}

impl AssemblySearch {
    pub fn new(vars: &VarTable, mode: Mode, state: TraceState, regime: &ConstraintNode, params: Vec<VarId>) -> Self {
        let summation = vars.summation();
        let lhs_steps = steps_depending_on(&state.lhs, summation);
        let mut s = AssemblySearch {
            mode,
            summation,
            params,
            lhs_steps,
            node: Node {
                state,
                frame: regime.frame.clone(),
                steps: Vec::new(),
                cursor: Cursor::at(Stage::Done, Phase::Rule1),
                rhs_steps: Vec::new(),
            },
        };
        s.node.cursor = s.enter(Stage::Lhs(0), 0);
        s
    }

    fn enter(&self, stage: Stage, rhs_len: usize) -> Cursor {
        match stage {
            Stage::Lhs(t) if t >= self.lhs_steps.len() => Cursor::at(Stage::Move, Phase::Rule1),
            Stage::Lhs(_) => Cursor::at(stage, Phase::Rule1),
            Stage::Rhs(t) if t >= rhs_len => Cursor::at(Stage::Done, Phase::Rule1),
            Stage::Rhs(_) if self.mode == Mode::Plus => Cursor::at(stage, Phase::Orient),
            Stage::Rhs(_) if self.params.is_empty() => Cursor::at(stage, Phase::Constants),
            Stage::Rhs(_) => Cursor::at(stage, Phase::Rule1),
            Stage::Move | Stage::Done => Cursor::at(stage, Phase::Rule1),
        }
    }

    fn vars_in_task(&self, stage: Stage) -> usize {
        match stage {
            Stage::Lhs(_) => 1,
            _ => self.params.len(),
        }
    }

    fn next_phase(&self, c: &Cursor, rhs_len: usize) -> Cursor {
        let with = |phase| Cursor { phase, last_key: None, ..c.clone() };
        let next_task = || match c.stage {
            Stage::Lhs(t) => self.enter(Stage::Lhs(t + 1), rhs_len),
            Stage::Rhs(t) => self.enter(Stage::Rhs(t + 1), rhs_len),
            s => self.enter(s, rhs_len),
        };
        match c.phase {
            Phase::Orient if self.vars_in_task(c.stage) == 0 => with(Phase::Constants),
            Phase::Orient => with(Phase::Rule1),
            Phase::Rule1 => with(Phase::Rule2),
            Phase::Rule2 => with(Phase::Rule3),
            Phase::Rule3 if self.mode == Mode::Plus => with(Phase::Pairwise),
            Phase::Rule3 | Phase::Pairwise => with(Phase::Residual),
            Phase::Residual if c.var + 1 < self.vars_in_task(c.stage) => {
                Cursor { var: c.var + 1, phase: Phase::Rule1, last_key: None, ..c.clone() }
            }
            Phase::Residual if matches!(c.stage, Stage::Rhs(_)) => with(Phase::Constants),
            Phase::Residual | Phase::Constants => next_task(),
        }
    }

    fn side(&self) -> Side {
        match self.node.cursor.stage {
            Stage::Lhs(_) => Side::Lhs,
            _ => Side::Rhs,
        }
    }

    fn step_k(&self) -> u32 {
        match self.node.cursor.stage {
            Stage::Lhs(t) => self.lhs_steps[t],
            Stage::Rhs(t) => self.node.rhs_steps[t],
            _ => unreachable!("no step group outside a task"),
        }
    }

    fn target(&self) -> VarId {
        match self.node.cursor.stage {
            Stage::Lhs(_) => self.summation,
            _ => self.params[self.node.cursor.var],
        }
    }

    /// The current side restricted to the task's step, in working orientation.
    fn view(&self) -> BracketFraction {
        let f = match self.side() {
            Side::Lhs => &self.node.state.lhs,
            Side::Rhs => &self.node.state.rhs,
        }
        .restrict_step(self.step_k());
        match self.node.cursor.orientation {
            Orientation::Numerator => f,
            Orientation::Denominator => f.inv(),
        }
    }

    fn working_sets(&self) -> (Vec<SquareBracket>, Vec<SquareBracket>) {
        let x = self.target();
        let v = self.view();
        let pick = |bs: &[SquareBracket]| bs.iter().filter(|b| b.depends_on(x)).cloned().collect();
        (pick(v.num()), pick(v.den()))
    }

    /// `e >= 1` checked against the current frame and added when new.
    fn guard(&self, frame: &ConeFrame, e: &AffineExpr) -> Option<ConeFrame> {
        if e.is_constant() {
            return (e.constant_term() >= 1).then(|| frame.clone());
        }
        let node = ConstraintNode { frame: frame.clone(), history: Vec::new() };
        node.assume_positive(e)
    }

    fn make_step(
        &self,
        rule: RuleKind,
        before: BracketFraction,
        after: BracketFraction,
        binomial: Option<QBinomial>,
        residuals: Vec<ResidualFactor>,
        inequality: Option<AffineExpr>,
    ) -> ProofStep {
        let o = self.node.cursor.orientation;
        let (before, after) = match o {
            Orientation::Numerator => (before, after),
            Orientation::Denominator => (before.inv(), after.inv()),
        };
        let flip = |r: ResidualFactor| match o {
            Orientation::Numerator => r,
            Orientation::Denominator => ResidualFactor { orientation: r.orientation.flip(), ..r },
        };
        ProofStep {
            rule,
            side: self.side(),
            variable: self.target_or_none(),
            before,
            after,
            binomial: binomial.map(|b| (b, o)),
            residuals: residuals.into_iter().map(flip).collect(),
            coeff_delta: None,
            inequality: inequality.filter(|e| !e.is_constant()),
        }
    }

    fn target_or_none(&self) -> Option<VarId> {
        match self.node.cursor.phase {
            Phase::Constants | Phase::Orient => None,
            _ => Some(self.target()),
        }
    }

    fn rule_candidates(&self) -> Vec<Candidate> {
        let x = self.target();
        let k = self.step_k();
        let (a_set, b_set) = self.working_sets();
        let one = || SquareBracket::constant(1, k);
        let mut out = Vec::new();
        match self.node.cursor.phase {
            Phase::Rule1 | Phase::Pairwise => {
                let rule1 = self.node.cursor.phase == Phase::Rule1;
                for a in distinct(&a_set) {
                    for b in distinct(&b_set) {
                        let same = a.arg.coeff(x) == b.arg.coeff(x);
                        if rule1 && !same {
                            continue;
                        }
                        let gap = &b.arg - &a.arg;
                        let (binomial, rule) = if rule1 {
                            (QBinomial::new(&b.arg - 1, gap.clone(), k), RuleKind::Rule1)
                        } else {
                            (QBinomial::new(&b.arg - 1, &a.arg - 1, k), RuleKind::PairwiseSingle)
                        };
                        let introduced = &gap + 1;
                        out.push(Candidate {
                            key: vec![a.clone(), b.clone()],
                            rule,
                            before: BracketFraction::new(vec![a.clone()], vec![b.clone()]),
                            after: BracketFraction::new(vec![one()], vec![SquareBracket::pure(introduced.clone(), k)]),
                            binomial: Some(binomial),
                            guard: Some(introduced),
                        });
                    }
                }
            }
            Phase::Rule2 => {
                for (i, j) in pairs(&a_set) {
                    let (a, a2) = (&a_set[i], &a_set[j]);
                    let target = &(&a.arg + &a2.arg) - 1;
                    for b in distinct(&b_set) {
                        if b.arg != target {
                            continue;
                        }
                        out.push(Candidate {
                            key: vec![a.clone(), a2.clone(), b.clone()],
                            rule: RuleKind::Rule2,
                            before: BracketFraction::new(vec![a.clone(), a2.clone()], vec![b.clone()]),
                            after: BracketFraction::of(one()),
                            binomial: Some(QBinomial::new(&b.arg - 1, &a.arg - 1, k)),
                            guard: None,
                        });
                    }
                }
            }
            Phase::Rule3 => {
                for (i, j) in pairs(&a_set) {
                    let (a, a2) = (&a_set[i], &a_set[j]);
                    if a.arg.coeff(x) + a2.arg.coeff(x) != 0 {
                        continue;
                    }
                    let total = &a.arg + &a2.arg;
                    out.push(Candidate {
                        key: vec![a.clone(), a2.clone()],
                        rule: RuleKind::Rule3,
                        before: BracketFraction::new(vec![a.clone(), a2.clone()], vec![]),
                        after: BracketFraction::new(vec![one(), SquareBracket::pure(&total - 1, k)], vec![]),
                        binomial: Some(QBinomial::new(&total - 2, &a.arg - 1, k)),
                        guard: Some(&total - 1),
                    });
                }
            }
            _ => {}
        }
        out.sort_by(|p, q| p.key.cmp(&q.key));
        out.dedup_by(|p, q| p.key == q.key);
        out
    }

    fn transition(&self, cursor: Cursor, step: Option<ProofStep>, frame: ConeFrame) -> Transition {
        Transition { step, frame, cursor, rhs_steps: None }
    }

    fn advance(&self) -> Transition {
        let c = self.next_phase(&self.node.cursor, self.node.rhs_steps.len());
        self.transition(c, None, self.node.frame.clone())
    }

    fn rule_choices(&self) -> Vec<Transition> {
        let mut feasible = Vec::new();
        for cand in self.rule_candidates() {
            let frame = match &cand.guard {
                Some(e) => match self.guard(&self.node.frame, e) {
                    Some(f) => f,
                    None => continue,
                },
                None => self.node.frame.clone(),
            };
            feasible.push((cand, frame));
        }
        if self.node.cursor.phase == Phase::Pairwise {
            let mut out: Vec<Transition> = feasible
                .into_iter()
                .map(|(c, f)| {
                    let step = self.make_step(c.rule, c.before, c.after, c.binomial, vec![], c.guard);
                    self.transition(self.node.cursor.clone(), Some(step), f)
                })
                .collect();
            out.push(self.advance());
            return out;
        }
        if feasible.is_empty() {
            return vec![self.advance()];
        }
        let floor = self.node.cursor.last_key.clone();
        let ordered: Vec<_> = feasible
            .into_iter()
            .filter(|(c, _)| floor.as_ref().is_none_or(|k| c.key >= *k))
            .collect();
        // remaining smaller keys mean this path is a reordering of another
        ordered
            .into_iter()
            .map(|(c, f)| {
                let cursor = Cursor { last_key: Some(c.key.clone()), ..self.node.cursor.clone() };
                let step = self.make_step(c.rule, c.before, c.after, c.binomial, vec![], c.guard);
                self.transition(cursor, Some(step), f)
            })
            .collect()
    }

    /// Leftover brackets paired into residual factors, or an empty check in
    /// basic mode.
    fn residual_choices(&self, constants: bool) -> Vec<Transition> {
        let (nums, dens) = if constants {
            let v = self.view();
            if v.num().iter().chain(v.den()).any(|b| !b.is_constant()) {
                return vec![];
            }
            (v.num().to_vec(), v.den().to_vec())
        } else {
            self.working_sets()
        };
        if nums.is_empty() && dens.is_empty() {
            return vec![self.advance()];
        }
        if self.mode == Mode::Basic {
            return vec![];
        }
        let Some(residuals) = extract_residuals(&nums, &dens, self.step_k()) else {
            return vec![];
        };
        let mut frame = self.node.frame.clone();
        for r in &residuals {
            match self.guard(&frame, &r.expr) {
                Some(f) => frame = f,
                None => return vec![],
            }
        }
        let step = self.make_step(
            RuleKind::ResidualExtract,
            BracketFraction::new(nums, dens),
            BracketFraction::one(),
            None,
            residuals,
            None,
        );
        let c = self.next_phase(&self.node.cursor, self.node.rhs_steps.len());
        vec![self.transition(c, Some(step), frame)]
    }

    fn move_choice(&self) -> Transition {
        let lhs = self.node.state.lhs.clone();
        let rhs = self.node.state.rhs.mul(&lhs.inv());
        let rhs_steps = rhs.steps();
        let step = (!lhs.is_one()).then(|| ProofStep {
            rule: RuleKind::MoveToProductSide,
            side: Side::Rhs,
            variable: None,
            after: lhs.inv(),
            before: lhs,
            binomial: None,
            residuals: vec![],
            coeff_delta: None,
            inequality: None,
        });
        let cursor = self.enter(Stage::Rhs(0), rhs_steps.len());
        Transition { step, frame: self.node.frame.clone(), cursor, rhs_steps: Some(rhs_steps) }
    }
}

impl Search for AssemblySearch {
    type Choice = Transition;
    type Undo = Node;
    type Solution = Assembled;

    fn choices(&self) -> Vec<Transition> {
        let c = &self.node.cursor;
        match c.stage {
            Stage::Done => vec![],
            Stage::Move => vec![self.move_choice()],
            Stage::Lhs(_) | Stage::Rhs(_) => match c.phase {
                Phase::Orient => [Orientation::Numerator, Orientation::Denominator]
                    .into_iter()
                    .map(|o| {
                        let next = self.next_phase(&Cursor { orientation: o, ..c.clone() }, self.node.rhs_steps.len());
                        self.transition(next, None, self.node.frame.clone())
                    })
                    .collect(),
                Phase::Rule1 | Phase::Rule2 | Phase::Rule3 | Phase::Pairwise => self.rule_choices(),
                Phase::Residual => self.residual_choices(false),
                Phase::Constants => self.residual_choices(true),
            },
        }
    }

    fn apply(&mut self, t: &Transition) -> Option<Node> {
        let saved = self.node.clone();
        if let Some(step) = &t.step {
            self.node.state.apply(step);
            self.node.steps.push(step.clone());
        }
        self.node.frame = t.frame.clone();
        self.node.cursor = t.cursor.clone();
        if let Some(rs) = &t.rhs_steps {
            self.node.rhs_steps = rs.clone();
        }
        Some(saved)
    }

    fn undo(&mut self, saved: Node) {
        self.node = saved;
    }

    fn solution(&self) -> Option<Assembled> {
        (self.node.cursor.stage == Stage::Done).then(|| Assembled {
            state: self.node.state.clone(),
            frame: self.node.frame.clone(),
            steps: self.node.steps.clone(),
        })
    }
}

fn steps_depending_on(f: &BracketFraction, v: VarId) -> Vec<u32> {
    let mut s: Vec<u32> = f.num().iter().chain(f.den()).filter(|b| b.depends_on(v)).map(|b| b.step).collect();
    s.sort_unstable();
    s.dedup();
    s
}

fn distinct(v: &[SquareBracket]) -> Vec<&SquareBracket> {
    let mut out: Vec<&SquareBracket> = v.iter().collect();
    out.sort();
    out.dedup();
    out
}

/// Index pairs `i < j` into a sorted list, one per distinct value pair.
fn pairs(v: &[SquareBracket]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            let (p, q) = if v[i] <= v[j] { (i, j) } else { (j, i) };
            if seen.insert((v[p].clone(), v[q].clone())) {
                out.push((p, q));
            }
        }
    }
    out
}

/// Pairs brackets whose arguments differ by a constant, smallest first,
/// and writes each `[e]/[e+j]` as a product of `1 - q^(k(e+i))` factors.
fn extract_residuals(nums: &[SquareBracket], dens: &[SquareBracket], k: u32) -> Option<Vec<ResidualFactor>> {
    let mut groups: BTreeMap<AffineExpr, (Vec<i64>, Vec<i64>)> = BTreeMap::new();
    for (b, is_num) in nums.iter().map(|b| (b, true)).chain(dens.iter().map(|b| (b, false))) {
        if !b.is_pure() || b.step != k {
            return None;
        }
        let c = b.arg.constant_term();
        let entry = groups.entry(&b.arg - c).or_default();
        if is_num { entry.0.push(c) } else { entry.1.push(c) }
    }
    let mut out = Vec::new();
    for (shape, (mut ns, mut ds)) in groups {
        if ns.len() != ds.len() {
            return None;
        }
        ns.sort_unstable();
        ds.sort_unstable();
        for (c, d) in ns.into_iter().zip(ds) {
            let gap = d - c;
            if gap.abs() > MAX_RESIDUAL_SPAN {
                return None;
            }
            let e = &shape + c;
            if gap > 0 {
                out.extend((0..gap).map(|i| ResidualFactor { orientation: Orientation::Numerator, expr: &e + i, step: k }));
            } else {
                out.extend((1..=-gap).map(|i| ResidualFactor { orientation: Orientation::Denominator, expr: &e - i, step: k }));
            }
        }
    }
    Some(out)
}
