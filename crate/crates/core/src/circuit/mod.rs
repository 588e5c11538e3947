//! Logical circuit representation, dependency analysis and workload synthesis.

mod dag;
mod parse;
mod synth;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use dag::{build_dag, parallelism_profile, DepDag, LatencyModel, ParallelismProfile};
pub use parse::{parse_qasm, ParseError, ParseErrorKind};
pub use synth::{synth_workload, SynthError, WorkloadSpec};

/// Logical operation kinds understood by the toolchain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpKind {
    H,
    X,
    Z,
    S,
    T,
    Cnot,
    Measure,
    Prepare,
}

impl OpKind {
    pub const ALL: [OpKind; 8] = [
        OpKind::H,
        OpKind::X,
        OpKind::Z,
        OpKind::S,
        OpKind::T,
        OpKind::Cnot,
        OpKind::Measure,
        OpKind::Prepare,
    ];

    pub fn arity(self) -> usize {
        match self {
            OpKind::Cnot => 2,
            _ => 1,
        }
    }

    /// T gates consume a distilled magic state.
    pub fn consumes_magic_state(self) -> bool {
        self == OpKind::T
    }

    pub fn mnemonic(self) -> &'static str {
        match self {
            OpKind::H => "h",
            OpKind::X => "x",
            OpKind::Z => "z",
            OpKind::S => "s",
            OpKind::T => "t",
            OpKind::Cnot => "cnot",
            OpKind::Measure => "measure",
            OpKind::Prepare => "prepare",
        }
    }

    pub fn from_mnemonic(name: &str) -> Option<OpKind> {
        let lower = name.to_ascii_lowercase();
        OpKind::ALL.into_iter().find(|k| k.mnemonic() == lower)
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.mnemonic())
    }
}

/// One or two logical qubit indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Operands {
    One(usize),
    Two(usize, usize),
}

impl Operands {
    pub fn iter(&self) -> impl Iterator<Item = usize> {
        let (a, b) = match *self {
            Operands::One(q) => (q, None),
            Operands::Two(q, r) => (q, Some(r)),
        };
        std::iter::once(a).chain(b)
    }

    pub fn first(&self) -> usize {
        match *self {
            Operands::One(q) | Operands::Two(q, _) => q,
        }
    }

    pub fn second(&self) -> Option<usize> {
        match *self {
            Operands::One(_) => None,
            Operands::Two(_, r) => Some(r),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Operands::One(_) => 1,
            Operands::Two(..) => 2,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogicalOp {
    pub id: usize,
    pub kind: OpKind,
    pub operands: Operands,
}

impl LogicalOp {
    pub fn is_two_qubit(&self) -> bool {
        self.kind.arity() == 2
    }
}

/// Error raised when assembling a circuit from raw parts.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CircuitError {
    #[error("op {op}: operand q{qubit} out of range for {num_qubits} qubits")]
    OperandOutOfRange {
        op: usize,
        qubit: usize,
        num_qubits: usize,
    },
    #[error("op {op}: {kind} expects {expected} operand(s), got {got}")]
    Arity {
        op: usize,
        kind: OpKind,
        expected: usize,
        got: usize,
    },
    #[error("op {op}: cnot operands must be distinct (q{qubit})")]
    RepeatedOperand { op: usize, qubit: usize },
}

/// A validated program: qubit count plus ops in program order with dense ids.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogicalCircuit {
    num_qubits: usize,
    ops: Vec<LogicalOp>,
}

impl LogicalCircuit {
    pub fn new(num_qubits: usize) -> Self {
        LogicalCircuit {
            num_qubits,
            ops: Vec::new(),
        }
    }

    /// Append an op; its id is its program-order index.
    pub fn push(&mut self, kind: OpKind, qubits: &[usize]) -> Result<usize, CircuitError> {
        let id = self.ops.len();
        if qubits.len() != kind.arity() {
            return Err(CircuitError::Arity {
                op: id,
                kind,
                expected: kind.arity(),
                got: qubits.len(),
            });
        }
        for &q in qubits {
            if q >= self.num_qubits {
                return Err(CircuitError::OperandOutOfRange {
                    op: id,
                    qubit: q,
                    num_qubits: self.num_qubits,
                });
            }
        }
        let operands = match *qubits {
            [a] => Operands::One(a),
            [a, b] if a == b => return Err(CircuitError::RepeatedOperand { op: id, qubit: a }),
            [a, b] => Operands::Two(a, b),
            _ => unreachable!("arity checked above"),
        };
        self.ops.push(LogicalOp { id, kind, operands });
        Ok(id)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn ops(&self) -> &[LogicalOp] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn t_count(&self) -> usize {
        self.ops.iter().filter(|o| o.kind == OpKind::T).count()
    }

    pub fn twoq_count(&self) -> usize {
        self.ops.iter().filter(|o| o.is_two_qubit()).count()
    }

    /// Render in the line-oriented assembly format accepted by [`parse_qasm`].
    pub fn to_qasm(&self) -> String {
        let mut out = format!("qubits {}\n", self.num_qubits);
        for op in &self.ops {
            out.push_str(op.kind.mnemonic());
            for q in op.operands.iter() {
                out.push_str(&format!(" q{q}"));
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn push_validates() {
        let mut c = LogicalCircuit::new(2);
        assert_eq!(c.push(OpKind::Cnot, &[0, 1]), Ok(0));
        assert!(matches!(
            c.push(OpKind::Cnot, &[1, 1]),
            Err(CircuitError::RepeatedOperand { .. })
        ));
        assert!(matches!(
            c.push(OpKind::H, &[2]),
            Err(CircuitError::OperandOutOfRange { qubit: 2, .. })
        ));
        assert!(matches!(c.push(OpKind::T, &[0, 1]), Err(CircuitError::Arity { .. })));
        assert_eq!(c.len(), 1);
    }

    #[test]
    fn mnemonic_roundtrip_is_case_insensitive() {
        for k in OpKind::ALL {
            assert_eq!(OpKind::from_mnemonic(&k.mnemonic().to_uppercase()), Some(k));
        }
        assert_eq!(OpKind::from_mnemonic("toffoli"), None);
    }
}
