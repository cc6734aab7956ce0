//! English rendering of explanations at user and knowledge-engineer detail.
//! Rendering is a pure function of the explanation value.

use super::{Clause, Detail, Direction, Explanation, ExplanationKind, Observation};

/// Two-decimal rendering with halves rounded away from zero and no `-0.00`.
pub fn format_probability(x: f64) -> String {
    let r = (x * 100.0).round() / 100.0;
    let r = if r == 0.0 { 0.0 } else { r };
    format!("{r:.2}")
}

pub fn render(expl: &Explanation, detail: Detail) -> String {
    if expl.clauses.is_empty() {
        return format!("The probability of {} did not change.", expl.hypothesis);
    }
    match (expl.kind, detail) {
        (ExplanationKind::Local, Detail::User) => local_user(expl),
        (ExplanationKind::Local, Detail::KnowledgeEngineer) => local_ke(expl),
        (ExplanationKind::Historical, Detail::User) => historical(expl, false),
        (ExplanationKind::Historical, Detail::KnowledgeEngineer) => historical(expl, true),
        (ExplanationKind::GlobalChain, Detail::User) => global(expl, false),
        (ExplanationKind::GlobalChain, Detail::KnowledgeEngineer) => global(expl, true),
    }
}

fn verb(direction: Direction) -> &'static str {
    match direction {
        Direction::Increased => "increased",
        Direction::Decreased => "decreased",
        Direction::Unchanged => "changed",
    }
}

fn sign(correlation: f64) -> &'static str {
    if correlation < 0.0 {
        "negatively"
    } else {
        "positively"
    }
}

fn from_to(before: f64, after: f64) -> String {
    format!("(from {} to {})", format_probability(before), format_probability(after))
}

fn headline(expl: &Explanation, ke: bool) -> String {
    let mut s = format!("The probability of {} {}", expl.hypothesis, verb(expl.direction));
    if ke {
        s.push(' ');
        s.push_str(&from_to(expl.hypothesis_before, expl.hypothesis_after));
    }
    s
}

/// What happened to the explainer. Knowledge engineers always get the
/// probabilities, users get "occurred" / "was ruled out" for observations.
fn explainer_phrase(c: &Clause, ke: bool) -> String {
    if ke {
        return format!(
            "the probability of {} {} {}",
            c.explainer,
            verb(c.direction),
            from_to(c.explainer_before, c.explainer_after)
        );
    }
    match c.observation {
        Some(Observation::Occurred) => format!("{} occurred", c.explainer),
        Some(Observation::RuledOut) => format!("{} was ruled out", c.explainer),
        None => format!("the probability of {} {}", c.explainer, verb(c.direction)),
    }
}

fn local_user(expl: &Explanation) -> String {
    let c = &expl.clauses[0];
    format!(
        "{} because {} after the update of {}.",
        headline(expl, false),
        explainer_phrase(c, false),
        c.source_leg
    )
}

fn local_ke(expl: &Explanation) -> String {
    let c = &expl.clauses[0];
    format!(
        "Events {h} and {e} are {s} correlated (P{{{h} | {e}}} - P{{{h}}} = {r}). {head} because {phrase} after the update of {leg}.",
        h = c.hypothesis,
        e = c.explainer,
        s = sign(c.reported_correlation),
        r = format_probability(c.reported_correlation),
        head = headline(expl, true),
        phrase = explainer_phrase(c, true),
        leg = c.source_leg,
    )
}

fn historical(expl: &Explanation, ke: bool) -> String {
    let mut out = String::new();
    if ke {
        out.push_str(&format!("{} is", expl.hypothesis));
        let mut previous: Option<&str> = None;
        let last = expl.clauses.len() - 1;
        for (i, c) in expl.clauses.iter().enumerate() {
            let s = sign(c.reported_correlation);
            if i > 0 {
                out.push_str(if i == last { " and" } else { "," });
            }
            if previous != Some(s) {
                out.push_str(&format!(" {s} correlated"));
            }
            out.push_str(&format!(
                " with {} ({})",
                c.explainer,
                format_probability(c.reported_correlation)
            ));
            previous = Some(s);
        }
        out.push_str(". ");
    }
    let reasons: Vec<String> = expl
        .clauses
        .iter()
        .map(|c| format!("{} after the update of the {}", explainer_phrase(c, ke), c.source_leg))
        .collect();
    out.push_str(&format!("{} because {}.", headline(expl, ke), reasons.join(", and because ")));
    out
}

fn global(expl: &Explanation, ke: bool) -> String {
    let mut out = String::new();
    if ke {
        for (i, c) in expl.clauses.iter().enumerate() {
            let lead = if i == 0 {
                format!("{} is", c.hypothesis)
            } else {
                ", which is".to_owned()
            };
            out.push_str(&format!(
                "{lead} {} correlated ({}) with {}",
                sign(c.reported_correlation),
                format_probability(c.reported_correlation),
                c.explainer
            ));
        }
        out.push_str(". ");
    }
    let reasons: Vec<String> = expl.clauses.iter().map(|c| explainer_phrase(c, ke)).collect();
    let source = &expl.clauses[expl.clauses.len() - 1].source_leg;
    out.push_str(&format!(
        "{} because {} after the update of {}.",
        headline(expl, ke),
        reasons.join(", because "),
        source
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_decimals() {
        assert_eq!(format_probability(0.605), "0.61");
        assert_eq!(format_probability(0.7000000000000001), "0.70");
        assert_eq!(format_probability(-0.001), "0.00");
        assert_eq!(format_probability(-0.125), "-0.13");
        assert_eq!(format_probability(1.0), "1.00");
    }
}
