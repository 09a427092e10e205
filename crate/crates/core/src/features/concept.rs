use crate::cohort::CodeType;

/// Diagnosis codes collapse to the text before the first `.`; procedure
/// codes pass through.
pub fn group_code(code: &str, code_type: CodeType) -> &str {
    match code_type {
        CodeType::Dx => code.split('.').next().unwrap_or(code),
        CodeType::Px => code,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grouping() {
        assert_eq!(group_code("X.43", CodeType::Dx), "X");
        assert_eq!(group_code("X.1", CodeType::Dx), "X");
        assert_eq!(group_code("428", CodeType::Dx), "428");
        assert_eq!(group_code("99214", CodeType::Px), "99214");
        assert_eq!(group_code("12.5", CodeType::Px), "12.5");
    }
}
