use super::{CircuitError, LogicalCircuit, OpKind};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown gate `{0}`")]
    UnknownGate(String),
    #[error("operand q{qubit} out of range for {num_qubits} qubits")]
    OperandOutOfRange { qubit: usize, num_qubits: usize },
    #[error("duplicate qubit declaration")]
    DuplicateDeclaration,
    #[error("missing `qubits <N>` header before first operation")]
    MissingHeader,
}

fn err(line: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { line, kind }
}

fn parse_operand(tok: &str, line: usize) -> Result<usize, ParseError> {
    let digits = tok
        .strip_prefix('q')
        .or_else(|| tok.strip_prefix('Q'))
        .ok_or_else(|| err(line, ParseErrorKind::Syntax(format!("expected q<i>, got `{tok}`"))))?;
    digits
        .parse::<usize>()
        .map_err(|_| err(line, ParseErrorKind::Syntax(format!("bad qubit index `{tok}`"))))
}

/// Parse the line-oriented circuit format.
///
/// The first non-comment line must be `qubits <N>`; every following line holds
/// one gate (`h`, `x`, `z`, `s`, `t`, `measure`, `prepare` with one operand,
/// `cnot` with two). `#` starts a comment. Gate names are case-insensitive.
pub fn parse_qasm(text: &str) -> Result<LogicalCircuit, ParseError> {
    let mut circuit: Option<LogicalCircuit> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut toks = content.split_whitespace();
        let head = toks.next().expect("non-empty line has a token");
        let args: Vec<&str> = toks.collect();

        if head.eq_ignore_ascii_case("qubits") {
            if circuit.is_some() {
                return Err(err(line_no, ParseErrorKind::DuplicateDeclaration));
            }
            let [n] = args.as_slice() else {
                return Err(err(
                    line_no,
                    ParseErrorKind::Syntax("expected `qubits <N>`".into()),
                ));
            };
            let n = n.parse::<usize>().map_err(|_| {
                err(line_no, ParseErrorKind::Syntax(format!("bad qubit count `{n}`")))
            })?;
            circuit = Some(LogicalCircuit::new(n));
            continue;
        }

        let kind = OpKind::from_mnemonic(head)
            .ok_or_else(|| err(line_no, ParseErrorKind::UnknownGate(head.to_string())))?;
        let c = circuit
            .as_mut()
            .ok_or_else(|| err(line_no, ParseErrorKind::MissingHeader))?;
        if args.len() != kind.arity() {
            return Err(err(
                line_no,
                ParseErrorKind::Syntax(format!(
                    "{kind} takes {} operand(s), got {}",
                    kind.arity(),
                    args.len()
                )),
            ));
        }
        let qubits = args
            .iter()
            .map(|t| parse_operand(t, line_no))
            .collect::<Result<Vec<_>, _>>()?;
        c.push(kind, &qubits).map_err(|e| match e {
            CircuitError::OperandOutOfRange {
                qubit, num_qubits, ..
            } => err(line_no, ParseErrorKind::OperandOutOfRange { qubit, num_qubits }),
            other => err(line_no, ParseErrorKind::Syntax(other.to_string())),
        })?;
    }
    circuit.ok_or_else(|| err(0, ParseErrorKind::MissingHeader))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Operands;

    #[test]
    fn minimal_cnot() {
        let c = parse_qasm("qubits 2\ncnot q0 q1").unwrap();
        assert_eq!(c.num_qubits(), 2);
        assert_eq!(c.len(), 1);
        assert_eq!(c.ops()[0].kind, OpKind::Cnot);
        assert_eq!(c.ops()[0].operands, Operands::Two(0, 1));
    }

    #[test]
    fn repeated_t() {
        let c = parse_qasm("qubits 1\nt q0\nt q0").unwrap();
        assert_eq!(c.t_count(), 2);
        assert_eq!(c.len(), 2);
    }

    #[test]
    fn out_of_range_operand() {
        let e = parse_qasm("qubits 3\ncnot q0 q5").unwrap_err();
        assert_eq!(e.line, 2);
        assert_eq!(
            e.kind,
            ParseErrorKind::OperandOutOfRange {
                qubit: 5,
                num_qubits: 3
            }
        );
    }

    #[test]
    fn comments_case_and_blank_lines() {
        let src = "# header comment\n\nQUBITS 2 # two\nH q0\n  CNOT Q0 q1  # entangle\nMeasure q1\n";
        let c = parse_qasm(src).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.ops()[2].kind, OpKind::Measure);
    }

    #[test]
    fn rejects_bad_input() {
        let cases = [
            ("qubits 2\nqubits 3\n", 2, "duplicate"),
            ("h q0\n", 1, "missing"),
            ("qubits 2\nswap q0 q1\n", 2, "unknown"),
            ("qubits 2\ncnot q0\n", 2, "syntax"),
            ("qubits 2\nh 0\n", 2, "syntax"),
            ("qubits 2\ncnot q1 q1\n", 2, "syntax"),
            ("qubits x\n", 1, "syntax"),
        ];
        for (src, line, what) in cases {
            let e = parse_qasm(src).unwrap_err();
            assert_eq!(e.line, line, "{src:?}");
            let msg = e.to_string();
            match what {
                "duplicate" => assert_eq!(e.kind, ParseErrorKind::DuplicateDeclaration),
                "missing" => assert_eq!(e.kind, ParseErrorKind::MissingHeader),
                "unknown" => assert!(matches!(e.kind, ParseErrorKind::UnknownGate(_))),
                _ => assert!(msg.contains("syntax"), "{msg}"),
            }
        }
        assert_eq!(parse_qasm("# nothing\n").unwrap_err().kind, ParseErrorKind::MissingHeader);
    }

    #[test]
    fn serialize_reparses() {
        let src = "qubits 3\nh q0\ncnot q0 q2\nt q1\nmeasure q2\nprepare q1\n";
        let c = parse_qasm(src).unwrap();
        assert_eq!(c.to_qasm(), src);
        assert_eq!(parse_qasm(&c.to_qasm()).unwrap(), c);
    }
}
