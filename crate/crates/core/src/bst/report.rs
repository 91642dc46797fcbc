use serde_json::json;

use super::BinomialTestResult;
use crate::types::Label;

pub const BST_CSV_HEADER: &str = "Token,Total_Count,0_Count,0_Prob,1_Count,1_Prob,0_P_Value,1_P_Value";

/// Scientific notation with six decimals and a signed two-digit exponent: `8.363595e-08`.
pub fn format_p_value(x: f64) -> String {
    let s = format!("{x:.6e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn bst_csv(results: &[BinomialTestResult]) -> String {
    let mut out = String::from(BST_CSV_HEADER);
    out.push('\n');
    for r in results {
        out.push_str(&format!(
            "{},{},{},{:.6},{},{:.6},{},{}\n",
            csv_field(&r.token),
            r.total_count,
            r.count0,
            r.prob0,
            r.count1,
            r.prob1,
            format_p_value(r.p_value0),
            format_p_value(r.p_value1)
        ));
    }
    out
}

/// `{"dismissal": [...], "approval": [...]}` listing biased tokens in result order.
pub fn biased_json(results: &[BinomialTestResult]) -> serde_json::Value {
    let pick = |label: Label| -> Vec<&str> {
        results.iter().filter(|r| r.biased_toward == Some(label)).map(|r| r.token.as_str()).collect()
    };
    json!({ "dismissal": pick(Label::Dismissal), "approval": pick(Label::Approval) })
}

/// Plot data for one label: every tested token with its count and p-value.
pub fn scatter_csv(results: &[BinomialTestResult], label: Label) -> String {
    let mut out = String::from("token,total_count,p_value\n");
    for r in results {
        out.push_str(&format!("{},{},{}\n", csv_field(&r.token), r.total_count, format_p_value(r.p_value(label))));
    }
    out
}
