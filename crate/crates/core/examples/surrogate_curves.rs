//! Arctan and sigmoid surrogates side by side, and how alpha sharpens them.

use dsqn::surrogate::{surrogate_grad, surrogate_value};
use dsqn::SurrogateConfig;

fn main() -> dsqn::Result<()> {
    let families = [
        ("arctan a=2", SurrogateConfig::arctan(2.0)),
        ("arctan a=8", SurrogateConfig::arctan(8.0)),
        ("sigmoid a=4", SurrogateConfig::sigmoid(4.0)),
    ];
    print!("{:>6}", "x");
    for (name, _) in &families {
        print!(" | {name:^21}");
    }
    println!();
    for i in -8..=8 {
        let x = f64::from(i) * 0.25;
        print!("{x:>6.2}");
        for (_, cfg) in &families {
            print!(" | {:>9.5} {:>11.5}", surrogate_value(x, cfg)?, surrogate_grad(x, cfg)?);
        }
        println!();
    }
    Ok(())
}
