//! CSV tables and plot scripts.

use std::fmt::Write as _;

/// Format with 9 significant digits, like C's `%.9g`.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..9).contains(&exp) {
        let fixed = format!("{:.*}", (8 - exp) as usize, x);
        trim_fraction(&fixed).to_string()
    } else {
        format!("{}e{}", trim_fraction(mantissa), exp)
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// A CSV table with a fixed header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width must match header");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// A matplotlib script that plots `csv_name`.
pub fn plot_script(kind: &str, csv_name: &str) -> String {
    let body = match kind {
        "fig4" => {
            r#"groups = {}
for r in rows:
    key = (r["gamma1"], r["gamma2"], r["n_elements"])
    groups.setdefault(key, []).append(r)
fig, ax = plt.subplots()
for (g1, g2, n), rs in sorted(groups.items()):
    label = ("RIS-NOMA-BackCom N=%s" % n) if n != "0" else "NOMA-BackCom"
    ax.plot([float(r["tau_db"]) for r in rs], [float(r["sp_joint"]) for r in rs],
            marker="o" if n != "0" else "s", label="%s, G1=%s, G2=%s" % (label, g1, g2))
ax.set_xlabel("SINR threshold tau (dB)")
ax.set_ylabel("Success probability (both BDs decoded)")
"#
        }
        "fig5" => {
            r#"groups = {}
for r in rows:
    groups.setdefault((r["ce_power_dbm"], r["design"]), []).append(r)
fig, ax = plt.subplots()
for (p, design), rs in sorted(groups.items()):
    ax.plot([int(r["n_elements"]) for r in rs], [float(r["throughput_gated"]) for r in rs],
            marker="o", label="%s, P=%s dBm" % (design, p))
ax.set_xlabel("Number of RIS elements N")
ax.set_ylabel("Cluster throughput (bps/Hz)")
"#
        }
        "fig6" => {
            r#"groups = {}
for r in rows:
    groups.setdefault(r["efficiency"], []).append(r)
fig, ax = plt.subplots()
for eta, rs in sorted(groups.items()):
    ax.plot([int(r["n_elements"]) for r in rs], [1e3 * float(r["energy_mean_bd_j"]) for r in rs],
            marker="o", label="eta=%s" % eta)
ax.set_xlabel("Number of RIS elements N")
ax.set_ylabel("Harvested energy per BD (mJ)")
"#
        }
        _ => {
            r#"fig, ax = plt.subplots()
xs = list(range(len(rows)))
for col in ("sp_strong", "sp_weak", "sp_joint"):
    ax.plot(xs, [float(r[col]) for r in rows], marker="o", label=col)
ax.set_xticks(xs)
ax.set_xticklabels([r["axis_value"] for r in rows], rotation=45)
ax.set_xlabel(rows[0]["axis"] if rows else "")
ax.set_ylabel("Success probability")
"#
        }
    };
    let mut out = String::new();
    let _ = writeln!(out, "#!/usr/bin/env python3");
    let _ = writeln!(out, "# Renders {csv_name} with matplotlib. Usage: python3 <this script>");
    let _ = writeln!(out, "import csv, os");
    let _ = writeln!(out, "import matplotlib");
    let _ = writeln!(out, "matplotlib.use(\"Agg\")");
    let _ = writeln!(out, "import matplotlib.pyplot as plt");
    let _ = writeln!(out);
    let _ = writeln!(out, "here = os.path.dirname(os.path.abspath(__file__))");
    let _ = writeln!(out, "with open(os.path.join(here, {csv_name:?})) as fh:");
    let _ = writeln!(out, "    rows = list(csv.DictReader(fh))");
    out.push_str(body);
    let _ = writeln!(out, "ax.grid(True)");
    let _ = writeln!(out, "ax.legend(fontsize=\"small\")");
    let _ = writeln!(out, "fig.tight_layout()");
    let _ = writeln!(out, "fig.savefig(os.path.join(here, {:?}))", format!("{kind}.png"));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(3.16227766016838), "3.16227766");
        assert_eq!(fmt_sig(-90.0), "-90");
        assert_eq!(fmt_sig(1e-12), "1e-12");
        assert_eq!(fmt_sig(0.000123456789123), "0.000123456789");
        assert_eq!(fmt_sig(123456789012.0), "1.23456789e11");
        assert_eq!(fmt_sig(9.9999999999), "10");
        assert_eq!(fmt_sig(0.5), "0.5");
        assert_eq!(fmt_sig(0.0000190997242), "1.90997242e-5");
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), "x".into()]);
        assert_eq!(t.to_csv(), "a,b\n1,x\n");
    }

    #[test]
    fn plot_scripts_reference_their_csv() {
        for kind in ["fig4", "fig5", "fig6", "custom"] {
            let s = plot_script(kind, &format!("{kind}.csv"));
            assert!(s.contains(&format!("\"{kind}.csv\"")));
            assert!(s.contains("savefig"));
        }
    }
}
