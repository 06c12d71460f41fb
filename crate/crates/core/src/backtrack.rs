//! Generic depth-first backtracking: grow a state by choices, undo on return,
//! collect every accepting state.

/// A search problem explored by [`backtrack`].
pub trait Search {
    type Choice;
    /// Whatever `undo` needs to restore the previous state.
    type Undo;
    type Solution;

    /// Candidate choices at the current state, in exploration order.
    fn choices(&self) -> Vec<Self::Choice>;

    /// Applies `choice` if it passes the constraint check.
    fn apply(&mut self, choice: &Self::Choice) -> Option<Self::Undo>;

    fn undo(&mut self, undo: Self::Undo);

    /// `Some` when the current state is a solution; solutions are leaves.
    fn solution(&self) -> Option<Self::Solution>;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchOutcome<S> {
    pub solutions: Vec<S>,
    pub nodes: u64,
    /// The node budget ran out before the tree was exhausted.
    pub exhausted: bool,
}

/// Enumerates all solutions reachable from the current state of `problem`,
/// visiting at most `budget` nodes.
pub fn backtrack<P: Search>(problem: &mut P, budget: u64) -> SearchOutcome<P::Solution> {
    let mut out = SearchOutcome { solutions: Vec::new(), nodes: 0, exhausted: false };
    visit(problem, budget, &mut out);
    out
}

fn visit<P: Search>(p: &mut P, budget: u64, out: &mut SearchOutcome<P::Solution>) {
    if out.nodes >= budget {
        out.exhausted = true;
        return;
    }
    out.nodes += 1;
    if let Some(s) = p.solution() {
        out.solutions.push(s);
        return;
    }
    for c in p.choices() {
        if let Some(u) = p.apply(&c) {
            visit(p, budget, out);
            p.undo(u);
            if out.exhausted {
                return;
            }
        }
    }
}
