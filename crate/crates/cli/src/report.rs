use serde::Serialize;
use serde_json::Value;

/// Machine-readable record of one invocation.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: &'static str,
    /// Arguments as given, without the program name.
    pub args: Vec<String>,
    pub inputs: Value,
    /// FNV-1a 64 of the compact JSON of `inputs`.
    pub inputs_digest: String,
    pub outputs: Value,
    pub warnings: Vec<String>,
    pub wall_time_s: f64,
    pub version: &'static str,
}

impl RunReport {
    pub fn new(command: &'static str, inputs: Value, outputs: Value) -> Self {
        let digest = format!("fnv1a64:{:016x}", fnv1a64(inputs.to_string().as_bytes()));
        Self {
            command,
            args: Vec::new(),
            inputs,
            inputs_digest: digest,
            outputs,
            warnings: Vec::new(),
            wall_time_s: 0.0,
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a64(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a64(b"a"), 0xaf63_dc4c_8601_ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x8594_4171_f739_67e8);
    }

    #[test]
    fn digest_depends_only_on_inputs() {
        let a = RunReport::new("price", serde_json::json!({"x": 1}), serde_json::json!(1));
        let b = RunReport::new("price", serde_json::json!({"x": 1}), serde_json::json!(2));
        assert_eq!(a.inputs_digest, b.inputs_digest);
    }
}
