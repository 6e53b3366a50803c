//! Dense cubic tensors over one index range `0..d`.

use serde::{Deserialize, Serialize};

macro_rules! tensor {
    ($name:ident, $rank:expr, ($($i:ident),+)) => {
        #[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
        pub struct $name {
            pub d: usize,
            pub data: Vec<f64>,
        }

        impl $name {
            pub fn zeros(d: usize) -> Self {
                $name { d, data: vec![0.0; d.pow($rank)] }
            }

            #[inline]
            fn idx(&self, $($i: usize),+) -> usize {
                let mut k = 0;
                $( k = k * self.d + $i; )+
                k
            }

            #[inline]
            pub fn get(&self, $($i: usize),+) -> f64 {
                self.data[self.idx($($i),+)]
            }

            #[inline]
            pub fn set(&mut self, $($i: usize),+, v: f64) {
                let k = self.idx($($i),+);
                self.data[k] = v;
            }

            #[inline]
            pub fn add(&mut self, $($i: usize),+, v: f64) {
                let k = self.idx($($i),+);
                self.data[k] += v;
            }

            pub fn max_abs(&self) -> f64 {
                self.data.iter().fold(0.0f64, |a, &x| a.max(x.abs()))
            }

            pub fn max_diff(&self, o: &Self) -> f64 {
                self.data.iter().zip(&o.data).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()))
            }
        }
    };
}

tensor!(T3, 3, (a, b, c));
tensor!(T4, 4, (a, b, c, e));
tensor!(T5, 5, (a, b, c, e, f));
