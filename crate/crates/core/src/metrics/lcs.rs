/// Length of the longest common subsequence of two token sequences.
///
/// Rolling two-row dynamic program, O(|a|·|b|) time and O(min) space.
pub fn lcs_length<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    if short.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; short.len() + 1];
    let mut curr = vec![0usize; short.len() + 1];
    for x in long {
        for (j, y) in short.iter().enumerate() {
            curr[j + 1] = if x == y {
                prev[j] + 1
            } else {
                curr[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[short.len()]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basics() {
        assert_eq!(lcs_length(&["a", "b", "c"], &["a", "x", "c"]), 2);
        let x = ["p", "q", "r", "q"];
        assert_eq!(lcs_length(&x, &x), 4);
        assert_eq!(lcs_length::<&str>(&[], &["a"]), 0);
        assert_eq!(lcs_length(&["a", "b"], &["b", "a"]), 1);
    }
}
