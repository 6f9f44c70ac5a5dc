// SPDX-License-Identifier: Apache-2.0

//! Block kinds and their bit-true semantics.
//!
//! Every value is a 32-bit two's-complement [`Sample`]; all arithmetic wraps.
//! The same `step_block` function backs every abstraction level, which is what
//! makes cross-level traces comparable bit for bit.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use super::ModelError;

/// A single stream value.
pub type Sample = i32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BlockKind {
    Const(Sample),
    Add,
    Sub,
    Mul,
    Gain(Sample),
    /// `Z^-k`: output lags input by `k` samples.
    Delay(usize),
    Mux(usize),
    Demux(usize),
    Fir(Vec<Sample>),
    Quant(Sample),
    IfElse,
    ForLoop { count: u32, func: String },
    User(String),
    Sink,
}

impl BlockKind {
    /// Name used by the block library; generated task calls carry this name.
    pub fn library_name(&self) -> &'static str {
        match self {
            BlockKind::Const(_) => "const",
            BlockKind::Add => "add",
            BlockKind::Sub => "sub",
            BlockKind::Mul => "mul",
            BlockKind::Gain(_) => "gain",
            BlockKind::Delay(_) => "delay",
            BlockKind::Mux(_) => "mux",
            BlockKind::Demux(_) => "demux",
            BlockKind::Fir(_) => "fir",
            BlockKind::Quant(_) => "quant",
            BlockKind::IfElse => "if_else",
            BlockKind::ForLoop { .. } => "for_loop",
            BlockKind::User(_) => "user",
            BlockKind::Sink => "sink",
        }
    }

    pub fn input_ports(&self) -> Vec<String> {
        match self {
            BlockKind::Const(_) => vec![],
            BlockKind::Add | BlockKind::Sub | BlockKind::Mul => vec!["a".into(), "b".into()],
            BlockKind::IfElse => vec!["pred".into(), "a".into(), "b".into()],
            BlockKind::Mux(n) => {
                let mut ports = vec!["sel".to_string()];
                ports.extend((0..*n).map(|i| format!("in{i}")));
                ports
            }
            BlockKind::Demux(_) => vec!["sel".into(), "in".into()],
            _ => vec!["in".into()],
        }
    }

    pub fn output_ports(&self) -> Vec<String> {
        match self {
            BlockKind::Sink => vec![],
            BlockKind::Demux(n) => (0..*n).map(|i| format!("out{i}")).collect(),
            _ => vec!["out".into()],
        }
    }

    pub fn is_delay(&self) -> bool {
        matches!(self, BlockKind::Delay(_))
    }

    /// Registry names this block needs at run time.
    pub fn referenced_functions(&self) -> Vec<&str> {
        match self {
            BlockKind::ForLoop { func, .. } | BlockKind::User(func) => vec![func.as_str()],
            _ => vec![],
        }
    }

    /// Fresh, zero-initialized state for this kind.
    pub fn initial_state(&self) -> BlockState {
        match self {
            BlockKind::Delay(k) => BlockState::Delay(std::iter::repeat(0).take(*k).collect()),
            BlockKind::Fir(taps) => {
                BlockState::Fir(std::iter::repeat(0).take(taps.len().saturating_sub(1)).collect())
            }
            _ => BlockState::Stateless,
        }
    }

    /// Invariant violations of the kind's own parameters.
    pub fn param_errors(&self) -> Vec<String> {
        let mut errs = Vec::new();
        match self {
            BlockKind::Delay(0) => errs.push("delay length must be >= 1".to_string()),
            BlockKind::ForLoop { count: 0, .. } => {
                errs.push("for_loop count must be >= 1".to_string())
            }
            BlockKind::Quant(0) => errs.push("quant step must be non-zero".to_string()),
            BlockKind::Mux(0) | BlockKind::Demux(0) => {
                errs.push(format!("{} needs at least one way", self.library_name()))
            }
            BlockKind::Fir(taps) if taps.is_empty() => {
                errs.push("fir needs at least one coefficient".to_string())
            }
            _ => {}
        }
        errs
    }
}

impl fmt::Display for BlockKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlockKind::Const(c) => write!(f, "const({c})"),
            BlockKind::Gain(g) => write!(f, "gain({g})"),
            BlockKind::Delay(k) => write!(f, "delay({k})"),
            BlockKind::Mux(n) => write!(f, "mux({n})"),
            BlockKind::Demux(n) => write!(f, "demux({n})"),
            BlockKind::Quant(s) => write!(f, "quant({s})"),
            BlockKind::Fir(taps) => {
                let taps: Vec<String> = taps.iter().map(|t| t.to_string()).collect();
                write!(f, "fir({})", taps.join(", "))
            }
            BlockKind::ForLoop { count, func } => write!(f, "for_loop({count}, {func})"),
            BlockKind::User(func) => write!(f, "user({func})"),
            other => f.write_str(other.library_name()),
        }
    }
}

/// Per-block mutable state carried between ticks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BlockState {
    Stateless,
    /// Pending samples, oldest first.
    Delay(VecDeque<Sample>),
    /// Previous inputs, newest first (`in[n-1]`, `in[n-2]`, ...).
    Fir(VecDeque<Sample>),
}

pub type BlockFn = Arc<dyn Fn(Sample) -> Sample + Send + Sync>;

/// Host-registered functions referenced by `user(..)` and `for_loop(..)`.
#[derive(Clone, Default)]
pub struct FnRegistry {
    funcs: BTreeMap<String, BlockFn>,
}

impl fmt::Debug for FnRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.funcs.keys()).finish()
    }
}

impl FnRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// The functions every shipped model may use.
    pub fn builtin() -> Self {
        let mut r = Self::new();
        r.register("inc", |x| x.wrapping_add(1));
        r.register("dec", |x| x.wrapping_sub(1));
        r.register("neg", |x| x.wrapping_neg());
        r.register("abs", |x| x.wrapping_abs());
        r.register("dbl", |x| x.wrapping_mul(2));
        r.register("half", |x| x / 2);
        r.register("sq", |x| x.wrapping_mul(x));
        r.register("clip8", |x| x.clamp(-128, 127));
        // toy variable-length code: folds magnitude bits into a short symbol
        r.register("huff", |x| {
            let m = x.wrapping_abs() as u32;
            let len = 32 - m.leading_zeros();
            let sym = ((len << 4) | (m & 0xf)) as i32;
            if x < 0 {
                sym.wrapping_neg()
            } else {
                sym
            }
        });
        r.register("mix", |x| (x ^ (x >> 3)).wrapping_mul(0x9e37).wrapping_add(7));
        r
    }

    pub fn register<F>(&mut self, name: &str, f: F)
    where
        F: Fn(Sample) -> Sample + Send + Sync + 'static,
    {
        self.funcs.insert(name.to_string(), Arc::new(f));
    }

    pub fn get(&self, name: &str) -> Option<&BlockFn> {
        self.funcs.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.funcs.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.funcs.keys().map(String::as_str)
    }

    pub fn call(&self, name: &str, x: Sample) -> Result<Sample, ModelError> {
        self.get(name)
            .map(|f| f(x))
            .ok_or_else(|| ModelError::UnknownFunction(name.to_string()))
    }
}

/// Applies `func` `count` times to `x` within one tick.
pub fn fold_loop(registry: &FnRegistry, func: &str, count: u32, x: Sample) -> Result<Sample, ModelError> {
    let f = registry
        .get(func)
        .ok_or_else(|| ModelError::UnknownFunction(func.to_string()))?;
    Ok((0..count).fold(x, |acc, _| f(acc)))
}

/// Pure single-tick step: returns the outputs and the successor state.
pub fn step_block(
    kind: &BlockKind,
    inputs: &[Sample],
    state: &BlockState,
    registry: &FnRegistry,
) -> Result<(Vec<Sample>, BlockState), ModelError> {
    let mut next = state.clone();
    let outputs = step_block_in_place(kind, inputs, &mut next, registry)?;
    Ok((outputs, next))
}

/// In-place variant of [`step_block`] used by the simulators.
pub fn step_block_in_place(
    kind: &BlockKind,
    inputs: &[Sample],
    state: &mut BlockState,
    registry: &FnRegistry,
) -> Result<Vec<Sample>, ModelError> {
    let arity = kind.input_ports().len();
    if inputs.len() != arity {
        return Err(ModelError::Arity {
            kind: kind.to_string(),
            expected: arity,
            got: inputs.len(),
        });
    }
    let out = match kind {
        BlockKind::Const(c) => vec![*c],
        BlockKind::Add => vec![inputs[0].wrapping_add(inputs[1])],
        BlockKind::Sub => vec![inputs[0].wrapping_sub(inputs[1])],
        BlockKind::Mul => vec![inputs[0].wrapping_mul(inputs[1])],
        BlockKind::Gain(g) => vec![inputs[0].wrapping_mul(*g)],
        BlockKind::Delay(_) => {
            let BlockState::Delay(queue) = state else {
                return Err(ModelError::StateShape(kind.to_string()));
            };
            let oldest = queue.pop_front().unwrap_or(0);
            queue.push_back(inputs[0]);
            vec![oldest]
        }
        BlockKind::Fir(taps) => {
            let BlockState::Fir(history) = state else {
                return Err(ModelError::StateShape(kind.to_string()));
            };
            let mut acc = taps[0].wrapping_mul(inputs[0]);
            for (c, x) in taps[1..].iter().zip(history.iter()) {
                acc = acc.wrapping_add(c.wrapping_mul(*x));
            }
            if !history.is_empty() {
                history.pop_back();
                history.push_front(inputs[0]);
            }
            vec![acc]
        }
        BlockKind::Quant(step) => {
            if *step == 0 {
                return Err(ModelError::ZeroQuantStep);
            }
            // truncation toward zero; wrapping covers i32::MIN / -1
            vec![inputs[0].wrapping_div(*step).wrapping_mul(*step)]
        }
        BlockKind::IfElse => vec![if inputs[0] != 0 { inputs[1] } else { inputs[2] }],
        BlockKind::Mux(n) => {
            let sel = select_index(inputs[0], *n);
            vec![inputs[1 + sel]]
        }
        BlockKind::Demux(n) => {
            let sel = select_index(inputs[0], *n);
            let mut outs = vec![0; *n];
            outs[sel] = inputs[1];
            outs
        }
        BlockKind::ForLoop { count, func } => vec![fold_loop(registry, func, *count, inputs[0])?],
        BlockKind::User(func) => vec![registry.call(func, inputs[0])?],
        BlockKind::Sink => vec![],
    };
    Ok(out)
}

/// Selector values index modulo the number of ways.
pub fn select_index(sel: Sample, ways: usize) -> usize {
    (sel as i64).rem_euclid(ways as i64) as usize
}

/// Output of a delay block for the current tick, before its input is known.
pub fn delay_peek(state: &BlockState) -> Sample {
    match state {
        BlockState::Delay(q) => q.front().copied().unwrap_or(0),
        _ => 0,
    }
}

/// Enqueues the current input of a delay block (end of tick).
pub fn delay_push(state: &mut BlockState, input: Sample) {
    if let BlockState::Delay(q) = state {
        q.pop_front();
        q.push_back(input);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(kind: &BlockKind, inputs: &[Vec<Sample>]) -> Vec<Vec<Sample>> {
        let reg = FnRegistry::builtin();
        let mut st = kind.initial_state();
        inputs
            .iter()
            .map(|i| step_block_in_place(kind, i, &mut st, &reg).unwrap())
            .collect()
    }

    #[test]
    fn gain_multiplies() {
        assert_eq!(run(&BlockKind::Gain(3), &[vec![7]]), vec![vec![21]]);
    }

    #[test]
    fn delay_two_lags_by_two() {
        let out = run(&BlockKind::Delay(2), &[vec![1], vec![2], vec![3]]);
        assert_eq!(out, vec![vec![0], vec![0], vec![1]]);
    }

    #[test]
    fn for_loop_folds_within_tick() {
        let k = BlockKind::ForLoop { count: 3, func: "inc".into() };
        assert_eq!(run(&k, &[vec![5]]), vec![vec![8]]);
    }

    #[test]
    fn fir_uses_zero_history() {
        let k = BlockKind::Fir(vec![1, 2, 3]);
        let out = run(&k, &[vec![1], vec![0], vec![0], vec![0]]);
        assert_eq!(out, vec![vec![1], vec![2], vec![3], vec![0]]);
    }

    #[test]
    fn quant_truncates_toward_zero() {
        let k = BlockKind::Quant(4);
        let out = run(&k, &[vec![7], vec![-7], vec![8]]);
        assert_eq!(out, vec![vec![4], vec![-4], vec![8]]);
    }

    #[test]
    fn arithmetic_wraps() {
        assert_eq!(run(&BlockKind::Add, &[vec![i32::MAX, 1]]), vec![vec![i32::MIN]]);
        assert_eq!(run(&BlockKind::Quant(-1), &[vec![i32::MIN]]), vec![vec![i32::MIN]]);
    }

    #[test]
    fn mux_and_demux_route_by_select() {
        assert_eq!(run(&BlockKind::Mux(3), &[vec![1, 10, 20, 30]]), vec![vec![20]]);
        assert_eq!(run(&BlockKind::Mux(3), &[vec![-1, 10, 20, 30]]), vec![vec![30]]);
        assert_eq!(run(&BlockKind::Demux(2), &[vec![1, 9]]), vec![vec![0, 9]]);
    }

    #[test]
    fn if_else_selects_on_predicate() {
        assert_eq!(run(&BlockKind::IfElse, &[vec![0, 1, 2], vec![5, 1, 2]]), vec![vec![2], vec![1]]);
    }

    #[test]
    fn unresolved_user_function_errors() {
        let reg = FnRegistry::new();
        let k = BlockKind::User("nope".into());
        let err = step_block(&k, &[1], &k.initial_state(), &reg).unwrap_err();
        assert!(matches!(err, ModelError::UnknownFunction(_)));
    }

    #[test]
    fn step_is_pure() {
        let reg = FnRegistry::builtin();
        let k = BlockKind::Delay(1);
        let s0 = k.initial_state();
        let a = step_block(&k, &[4], &s0, &reg).unwrap();
        let b = step_block(&k, &[4], &s0, &reg).unwrap();
        assert_eq!(a, b);
        assert_eq!(s0, k.initial_state());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn delay_composition(a in 1usize..5, b in 1usize..5, xs in prop::collection::vec(any::<i32>(), 0..40)) {
                let reg = FnRegistry::builtin();
                let (da, db, dab) = (BlockKind::Delay(a), BlockKind::Delay(b), BlockKind::Delay(a + b));
                let (mut sa, mut sb, mut sab) = (da.initial_state(), db.initial_state(), dab.initial_state());
                for x in xs {
                    let y1 = step_block_in_place(&da, &[x], &mut sa, &reg).unwrap();
                    let y2 = step_block_in_place(&db, &y1, &mut sb, &reg).unwrap();
                    let y = step_block_in_place(&dab, &[x], &mut sab, &reg).unwrap();
                    prop_assert_eq!(y2, y);
                }
            }

            #[test]
            fn no_kind_traps(x in any::<i32>(), y in any::<i32>(), z in any::<i32>(), c in any::<i32>()) {
                let reg = FnRegistry::builtin();
                let step = if c == 0 { 1 } else { c };
                let kinds = vec![
                    BlockKind::Add, BlockKind::Sub, BlockKind::Mul, BlockKind::Gain(c),
                    BlockKind::Quant(step), BlockKind::Fir(vec![c, y]), BlockKind::IfElse,
                    BlockKind::Mux(2), BlockKind::Demux(3), BlockKind::User("sq".into()),
                    BlockKind::User("huff".into()), BlockKind::ForLoop { count: 4, func: "mix".into() },
                ];
                for k in kinds {
                    let n = k.input_ports().len();
                    let ins: Vec<i32> = [x, y, z, c].iter().copied().cycle().take(n).collect();
                    let (out, _) = step_block(&k, &ins, &k.initial_state(), &reg).unwrap();
                    prop_assert_eq!(out.len(), k.output_ports().len());
                }
            }
        }
    }
}
