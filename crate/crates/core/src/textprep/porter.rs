//! Porter suffix-stripping stemmer, following the behaviour of Martin
//! Porter's reference implementation (including its `bli`/`logi` rules and
//! leaving words of one or two letters alone).
//!
//! Input is expected lowercase. Any character that is not one of
//! `a e i o u` (or a vowel-position `y`) counts as a consonant.

pub fn stem(word: &str) -> String {
    let chars: Vec<char> = word.chars().collect();
    if chars.len() <= 2 {
        return word.to_string();
    }
    let mut s = Stemmer {
        len: chars.len(),
        b: chars,
        j: 0,
    };
    s.step1ab();
    if s.len > 1 {
        s.step1c();
        s.step2();
        s.step3();
        s.step4();
        s.step5();
    }
    s.b[..s.len].iter().collect()
}

struct Stemmer {
    b: Vec<char>,
    /// Current word length; `b[len..]` is scratch.
    len: usize,
    /// Length of the stem before the suffix last matched by `ends`.
    j: usize,
}

impl Stemmer {
    fn cons(&self, i: usize) -> bool {
        match self.b[i] {
            'a' | 'e' | 'i' | 'o' | 'u' => false,
            'y' => i == 0 || !self.cons(i - 1),
            _ => true,
        }
    }

    /// Number of VC sequences in `b[..j]`.
    fn m(&self) -> usize {
        let mut n = 0;
        let mut i = 0;
        loop {
            if i >= self.j {
                return n;
            }
            if !self.cons(i) {
                break;
            }
            i += 1;
        }
        i += 1;
        loop {
            loop {
                if i >= self.j {
                    return n;
                }
                if self.cons(i) {
                    break;
                }
                i += 1;
            }
            i += 1;
            n += 1;
            loop {
                if i >= self.j {
                    return n;
                }
                if !self.cons(i) {
                    break;
                }
                i += 1;
            }
            i += 1;
        }
    }

    fn vowel_in_stem(&self) -> bool {
        (0..self.j).any(|i| !self.cons(i))
    }

    /// `b[i-1..=i]` is a double consonant.
    fn double_cons(&self, i: usize) -> bool {
        i >= 1 && self.b[i] == self.b[i - 1] && self.cons(i)
    }

    /// `b[i-2..=i]` is consonant-vowel-consonant and the last is not w, x or y.
    fn cvc(&self, i: usize) -> bool {
        if i < 2 || !self.cons(i) || self.cons(i - 1) || !self.cons(i - 2) {
            return false;
        }
        !matches!(self.b[i], 'w' | 'x' | 'y')
    }

    fn ends(&mut self, suffix: &str) -> bool {
        let n = suffix.chars().count();
        if n > self.len {
            return false;
        }
        let start = self.len - n;
        if !self.b[start..self.len].iter().copied().eq(suffix.chars()) {
            return false;
        }
        self.j = start;
        true
    }

    fn set_to(&mut self, replacement: &str) {
        self.b.truncate(self.j);
        self.b.extend(replacement.chars());
        self.len = self.b.len();
    }

    fn replace_if_measured(&mut self, replacement: &str) {
        if self.m() > 0 {
            self.set_to(replacement);
        }
    }

    fn truncate(&mut self, len: usize) {
        self.len = len;
        self.b.truncate(len);
    }

    fn last(&self) -> char {
        self.b[self.len - 1]
    }

    fn step1ab(&mut self) {
        if self.last() == 's' {
            if self.ends("sses") {
                self.truncate(self.len - 2);
            } else if self.ends("ies") {
                self.set_to("i");
            } else if self.b[self.len - 2] != 's' {
                self.truncate(self.len - 1);
            }
        }
        if self.ends("eed") {
            if self.m() > 0 {
                self.truncate(self.len - 1);
            }
        } else if (self.ends("ed") || self.ends("ing")) && self.vowel_in_stem() {
            self.truncate(self.j);
            if self.ends("at") {
                self.set_to("ate");
            } else if self.ends("bl") {
                self.set_to("ble");
            } else if self.ends("iz") {
                self.set_to("ize");
            } else if self.double_cons(self.len - 1) {
                let ch = self.last();
                if !matches!(ch, 'l' | 's' | 'z') {
                    self.truncate(self.len - 1);
                }
            } else {
                self.j = self.len;
                if self.m() == 1 && self.cvc(self.len - 1) {
                    self.set_to("e");
                }
            }
        }
    }

    fn step1c(&mut self) {
        if self.ends("y") && self.vowel_in_stem() {
            self.b[self.len - 1] = 'i';
        }
    }

    fn step2(&mut self) {
        if self.len < 2 {
            return;
        }
        let rules: &[(&str, &str)] = match self.b[self.len - 2] {
            'a' => &[("ational", "ate"), ("tional", "tion")],
            'c' => &[("enci", "ence"), ("anci", "ance")],
            'e' => &[("izer", "ize")],
            'l' => &[
                ("bli", "ble"),
                ("alli", "al"),
                ("entli", "ent"),
                ("eli", "e"),
                ("ousli", "ous"),
            ],
            'o' => &[("ization", "ize"), ("ation", "ate"), ("ator", "ate")],
            's' => &[
                ("alism", "al"),
                ("iveness", "ive"),
                ("fulness", "ful"),
                ("ousness", "ous"),
            ],
            't' => &[("aliti", "al"), ("iviti", "ive"), ("biliti", "ble")],
            'g' => &[("logi", "log")],
            _ => return,
        };
        self.apply_first(rules);
    }

    fn step3(&mut self) {
        let rules: &[(&str, &str)] = match self.last() {
            'e' => &[("icate", "ic"), ("ative", ""), ("alize", "al")],
            'i' => &[("iciti", "ic")],
            'l' => &[("ical", "ic"), ("ful", "")],
            's' => &[("ness", "")],
            _ => return,
        };
        self.apply_first(rules);
    }

    /// First matching suffix wins, whether or not its measure condition holds.
    fn apply_first(&mut self, rules: &[(&str, &str)]) {
        for (suffix, replacement) in rules {
            if self.ends(suffix) {
                self.replace_if_measured(replacement);
                return;
            }
        }
    }

    fn step4(&mut self) {
        if self.len < 2 {
            return;
        }
        let matched = match self.b[self.len - 2] {
            'a' => self.ends("al"),
            'c' => self.ends("ance") || self.ends("ence"),
            'e' => self.ends("er"),
            'i' => self.ends("ic"),
            'l' => self.ends("able") || self.ends("ible"),
            'n' => self.ends("ant") || self.ends("ement") || self.ends("ment") || self.ends("ent"),
            'o' => {
                (self.ends("ion") && self.j >= 1 && matches!(self.b[self.j - 1], 's' | 't'))
                    || self.ends("ou")
            }
            's' => self.ends("ism"),
            't' => self.ends("ate") || self.ends("iti"),
            'u' => self.ends("ous"),
            'v' => self.ends("ive"),
            'z' => self.ends("ize"),
            _ => false,
        };
        if matched && self.m() > 1 {
            self.truncate(self.j);
        }
    }

    fn step5(&mut self) {
        self.j = self.len;
        if self.last() == 'e' {
            self.j = self.len - 1;
            let a = self.m();
            if a > 1 || (a == 1 && !self.cvc(self.len - 2)) {
                self.truncate(self.len - 1);
            }
        }
        self.j = self.len;
        if self.last() == 'l' && self.double_cons(self.len - 1) {
            self.j = self.len - 1;
            if self.m() > 1 {
                self.truncate(self.len - 1);
            }
        }
    }
}
