//! Wall-clock cost of single kernel evaluations.

use htype::heat::GroupKernel;
use std::time::Instant;
fn main() {
    for (n, m) in [(2usize, 1usize), (4, 3), (8, 7)] {
        let k = GroupKernel::new(n, m);
        for (xr, zr) in [(0.0, 0.0), (1.0, 1.0), (3.0, 5.0), (0.0, 10.0), (0.0, 20.0), (0.0, 40.0), (8.0, 0.0)] {
            let mut x = vec![0.0; n];
            x[0] = xr;
            let mut z = vec![0.0; m];
            z[0] = zr;
            let t = Instant::now();
            let v = k.value(1.0, &x, &z);
            println!("{n},{m} x={xr} z={zr}: {:?} {:?}", v, t.elapsed());
        }
    }
}
