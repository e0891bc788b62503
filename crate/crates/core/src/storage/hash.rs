/// 64-bit hash of a tuple of interned values (splitmix64 finalizer per word).
#[inline]
pub fn hash_tuple(t: &[u32]) -> u64 {
    let mut h: u64 = 0x9e37_79b9_7f4a_7c15 ^ t.len() as u64;
    for &v in t {
        h = mix(h ^ v as u64);
    }
    h
}

#[inline]
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_and_length_matter() {
        assert_ne!(hash_tuple(&[1, 2]), hash_tuple(&[2, 1]));
        assert_ne!(hash_tuple(&[]), hash_tuple(&[0]));
        assert_eq!(hash_tuple(&[7, 8, 9]), hash_tuple(&[7, 8, 9]));
    }
}
