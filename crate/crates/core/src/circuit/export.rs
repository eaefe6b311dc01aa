use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{Circuit, CircuitError, GateOp};
use crate::numerics::Matrix;

pub const CIRCUIT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    #[default]
    Json,
    QasmLike,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum GateKind {
    H,
    Cx,
    Unitary1,
    Unitary2,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GateRecord {
    kind: GateKind,
    qubits: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    matrix: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CircuitDocument {
    format_version: u32,
    n_qubits: usize,
    gates: Vec<GateRecord>,
}

fn record(op: &GateOp) -> GateRecord {
    let (kind, matrix) = match op {
        GateOp::Hadamard(_) => (GateKind::H, None),
        GateOp::Cnot { .. } => (GateKind::Cx, None),
        GateOp::Unitary1 { matrix, .. } => (GateKind::Unitary1, Some(matrix.to_rows())),
        GateOp::Unitary2 { matrix, .. } => (GateKind::Unitary2, Some(matrix.to_rows())),
    };
    GateRecord {
        kind,
        qubits: op.qubits(),
        matrix,
    }
}

fn op_from_record(r: GateRecord) -> Result<GateOp, CircuitError> {
    let arity = match r.kind {
        GateKind::H | GateKind::Unitary1 => 1,
        GateKind::Cx | GateKind::Unitary2 => 2,
    };
    if r.qubits.len() != arity {
        return Err(CircuitError::Document(format!(
            "{:?} gate needs {arity} qubits, got {}",
            r.kind,
            r.qubits.len()
        )));
    }
    let matrix = |m: Option<Vec<Vec<f64>>>| -> Result<Matrix, CircuitError> {
        let rows =
            m.ok_or_else(|| CircuitError::Document(format!("{:?} gate needs a matrix", r.kind)))?;
        Matrix::from_rows(&rows).map_err(|e| CircuitError::Document(e.to_string()))
    };
    Ok(match r.kind {
        GateKind::H => GateOp::Hadamard(r.qubits[0]),
        GateKind::Cx => GateOp::Cnot {
            control: r.qubits[0],
            target: r.qubits[1],
        },
        GateKind::Unitary1 => GateOp::Unitary1 {
            qubit: r.qubits[0],
            matrix: matrix(r.matrix)?,
        },
        GateKind::Unitary2 => GateOp::Unitary2 {
            qubits: [r.qubits[0], r.qubits[1]],
            matrix: matrix(r.matrix)?,
        },
    })
}

/// Renders `c` as JSON or as OpenQASM-flavoured text.
///
/// JSON numbers use the shortest representation that parses back to the same
/// `f64`, so import is bit-exact. In the text form `h`/`cx` are real
/// instructions while raw unitaries appear as `// pragma` comments and are
/// not executable by a QASM toolchain.
pub fn export_circuit(c: &Circuit, format: ExportFormat) -> Result<String, CircuitError> {
    match format {
        ExportFormat::Json => {
            let doc = CircuitDocument {
                format_version: CIRCUIT_FORMAT_VERSION,
                n_qubits: c.n_qubits(),
                gates: c.gates().iter().map(record).collect(),
            };
            Ok(serde_json::to_string_pretty(&doc)?)
        }
        ExportFormat::QasmLike => Ok(qasm_like(c)),
    }
}

pub fn import_json(text: &str) -> Result<Circuit, CircuitError> {
    let doc: CircuitDocument = serde_json::from_str(text)?;
    if doc.format_version != CIRCUIT_FORMAT_VERSION {
        return Err(CircuitError::Document(format!(
            "unsupported format_version {}",
            doc.format_version
        )));
    }
    let mut c = Circuit::new(doc.n_qubits);
    for r in doc.gates {
        c.push(op_from_record(r)?)?;
    }
    Ok(c)
}

fn matrix_literal(m: &Matrix) -> String {
    let rows: Vec<String> = m
        .to_rows()
        .iter()
        .map(|row| {
            let cells: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
            format!("[{}]", cells.join(","))
        })
        .collect();
    format!("[{}]", rows.join(","))
}

fn qasm_like(c: &Circuit) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "// qasm_like format_version {CIRCUIT_FORMAT_VERSION}");
    let _ = writeln!(
        out,
        "// pragma lines carry explicit real matrices and are not executable"
    );
    let _ = writeln!(out, "OPENQASM 2.0;");
    let _ = writeln!(out, "include \"qelib1.inc\";");
    let _ = writeln!(out, "qreg q[{}];", c.n_qubits());
    for op in c.gates() {
        let _ = match op {
            GateOp::Hadamard(q) => writeln!(out, "h q[{q}];"),
            GateOp::Cnot { control, target } => writeln!(out, "cx q[{control}],q[{target}];"),
            GateOp::Unitary1 { qubit, matrix } => {
                writeln!(
                    out,
                    "// pragma unitary1 q[{qubit}] {}",
                    matrix_literal(matrix)
                )
            }
            GateOp::Unitary2 { qubits, matrix } => writeln!(
                out,
                "// pragma unitary2 q[{}],q[{}] {}",
                qubits[0],
                qubits[1],
                matrix_literal(matrix)
            ),
        };
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ghz2() -> Circuit {
        let mut c = Circuit::new(2);
        c.h(0).unwrap();
        c.cx(0, 1).unwrap();
        c
    }

    #[test]
    fn qasm_like_ghz() {
        let text = export_circuit(&ghz2(), ExportFormat::QasmLike).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with("h ")).count(), 1);
        assert_eq!(text.lines().filter(|l| l.starts_with("cx ")).count(), 1);
        assert!(text.contains("qreg q[2];"));
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let theta = 0.123_456_789_f64;
        let (c, s) = (theta.cos(), theta.sin());
        let mut circ = ghz2();
        circ.push(GateOp::Unitary1 {
            qubit: 1,
            matrix: Matrix::from_row_slice(2, 2, &[c, -s, s, c]).unwrap(),
        })
        .unwrap();
        let text = export_circuit(&circ, ExportFormat::Json).unwrap();
        let back = import_json(&text).unwrap();
        assert_eq!(back, circ);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["format_version"], 1);
        assert_eq!(v["gates"][1]["kind"], "cx");
        assert_eq!(v["gates"][1]["qubits"], serde_json::json!([0, 1]));
    }

    #[test]
    fn import_rejects_bad_documents() {
        let bad_version = r#"{"format_version": 9, "n_qubits": 1, "gates": []}"#;
        assert!(matches!(
            import_json(bad_version),
            Err(CircuitError::Document(_))
        ));
        let missing_matrix = r#"{"format_version": 1, "n_qubits": 1, "gates": [{"kind": "unitary1", "qubits": [0]}]}"#;
        assert!(matches!(
            import_json(missing_matrix),
            Err(CircuitError::Document(_))
        ));
        let unknown = r#"{"format_version": 1, "n_qubits": 1, "gates": [], "extra": 1}"#;
        assert!(matches!(import_json(unknown), Err(CircuitError::Json(_))));
        let non_orthogonal = r#"{"format_version": 1, "n_qubits": 1,
            "gates": [{"kind": "unitary1", "qubits": [0], "matrix": [[1, 1], [0, 1]]}]}"#;
        assert!(matches!(
            import_json(non_orthogonal),
            Err(CircuitError::NotOrthogonal(_))
        ));
    }
}
