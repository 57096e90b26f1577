use super::PpoError;

/// Generalized advantage estimates and return targets for one trajectory.
///
/// `values` carries one extra bootstrap entry `V(s_T)`.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    gamma: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>), PpoError> {
    let t = rewards.len();
    if values.len() != t + 1 || dones.len() != t {
        return Err(PpoError::Shape(format!(
            "gae: {} rewards, {} values, {} dones",
            t,
            values.len(),
            dones.len()
        )));
    }
    let mut adv = vec![0.0; t];
    let mut next = 0.0;
    for i in (0..t).rev() {
        let live = if dones[i] { 0.0 } else { 1.0 };
        let delta = rewards[i] + gamma * values[i + 1] * live - values[i];
        next = delta + gamma * lambda * live * next;
        adv[i] = next;
    }
    let ret = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((adv, ret))
}

/// Shifts and scales `xs` to mean 0, standard deviation 1 (population).
pub fn normalize(xs: &mut [f64]) {
    if xs.len() < 2 {
        return;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if std == 0.0 {
        xs.iter_mut().for_each(|x| *x -= mean);
        return;
    }
    xs.iter_mut().for_each(|x| *x = (*x - mean) / std);
    // One more centering pass removes the rounding residue of the first.
    let residual = xs.iter().sum::<f64>() / n;
    xs.iter_mut().for_each(|x| *x -= residual);
}
