//! Per-command help with the symbols each command computes.

use crate::config::Command;

pub fn describe(cmd: Command) -> &'static str {
    match cmd {
        Command::Partition => {
            "partition: Z of the domain with + boundary conditions.\n\
             Z = Pf(K̂) times the conjugation prefactor; Z² = det(Id − T) with T the Kac-Ward transition matrix.\n\
             Output: quantity,insertions,theta,value,log_value,raw_sign\n"
        }
        Command::Spin => {
            "spin: E[σ_u1 .. σ_um] with + boundary conditions (the outer face carries spin +1).\n\
             Low-temperature contour expansion; evaluated as Pf(K̂ with sign flips along branch cuts κ) / Pf(K̂).\n\
             value is the magnitude; raw_sign is the sheet-dependent Pfaffian sign.\n\
             Flags: --face k,s (repeat)\n"
        }
        Command::Disorder => {
            "disorder: ⟨μ_v1 .. μ_v2n⟩, the Kramers-Wannier dual of spins.\n\
             High-temperature expansion with odd degree at the marked vertices; disorder lines γ modify edge weights x -> 1/x.\n\
             Flags: --vertex k,s (repeat, even count)\n"
        }
        Command::Mixed => {
            "mixed: |⟨μ_v.. σ_u..⟩|, disorders and spins along shared default paths; the overall sign is a sheet choice.\n\
             Flags: --vertex k,s --face k,s\n"
        }
        Command::Fermion => {
            "fermion: ⟨t_a1 φ_a1 .. t_a2k φ_a2k⟩ = Pf[K̂⁻¹ block] times edge weights.\n\
             Combinatorially a sum over subgraphs with paths joining the sources, each weighted by the winding sign τ(P).\n\
             Flags: --edge k,s:k,s (oriented tail:head, repeat)\n"
        }
        Command::Energy => {
            "energy: E[ε_e] = (sin θ)⁻¹ (E[σ_u− σ_u+] − (π − 2θ)/(π cos θ)) on each edge.\n\
             Equivalent disorder form (cos θ)⁻¹ (2θ/(π sin θ) − ⟨μ_v− μ_v+⟩) and fermionic form i η_e η̄_ē Φ(ē,e) − ε^∞.\n\
             Flags: --edge k,s:k,s (repeat; default all edges)\n"
        }
        Command::SholoCheck => {
            "sholo-check: residuals of the edge-source observable F(a,·) away from the source.\n\
             s-holomorphicity: Φ(d) = Re[e^{±i(π/4−θ)/2} η̄_d F(z_e)] for each corner d and adjacent mid-edge z_e.\n\
             massive harmonicity: Φ(d) − ¼ sin 2θ Σ Φ(d') = 0.\n\
             --all adds sin θ ⟨μμ⟩ + cos θ ⟨σσ⟩ = 1 on every interior edge.\n\
             Exit 3 when a residual exceeds --tolerance (default 1e-10).\n"
        }
        Command::Diagonal => {
            "diagonal: D_n = E[σ_(0,0) σ_(2n,0)] in infinite volume.\n\
             Critical: D_n = (2/π)^n ∏_{l<n} (1 − 1/(4l²))^{l−n}, checked by the Legendre recurrence.\n\
             Subcritical (--q, q = tan θ < 1): D_n and the dual D_n* from the Szegő recursion for the weight\n\
             w(e^{it}) = (1+q²)(1 − m² cos²(t/2))^{1/2}, m = sin 2θ.\n\
             Output: n,q,d,dstar\n"
        }
        Command::Opuc => {
            "opuc: monic orthogonal polynomials Φ_n on the unit circle for the diagonal weight,\n\
             Verblunsky coefficients α_n = −Φ_{n+1}(0) and norms β_n = ‖Φ_n‖² with β_{n+1} = β_n(1 − α_n²).\n\
             Output: n,alpha,beta and a JSON verdict on orthogonality and Szegő residuals.\n"
        }
        Command::Theta => {
            "theta: the full-plane observable Θ_n(k,s) reconstructed by Fourier inversion of Q_{n,s}.\n\
             Boundary values Θ_n(0,0) = D_n, Θ_n(2n,0) = D_n*; Δ_θΘ_n(0,0) = (1+q²)⁻¹ D_{n+1}.\n\
             Output: k,s,value\n"
        }
        Command::Converge => {
            "converge: lattice against continuum on the unit disk for a sweep of meshes δ.\n\
             fermion:    δ⁻¹ F(a, z) vs (2/π) f^[η](a, z)            (fermion convergence)\n\
             energy:     δ⁻¹ E[ε_z] vs (2/π) ⟨ε_z⟩                  (energy density convergence)\n\
             spin-ratio: (2δ)⁻¹ (E[σ_ũ σ_u2]/E[σ_u σ_u2] − 1) vs Re[A_Ω(u) (ũ − u)]/(2δ), A_Ω the pre-Schwarzian (spin ratio convergence)\n\
             spin2:      δ^{−1/4} E[σ_u1 σ_u2] vs C_σ² ⟨σ_u1 σ_u2⟩   (spin correlation convergence)\n\
             Passes when |ratio − 1| at the finest mesh is below the threshold and the last three deviations do not increase.\n\
             Output: delta,lattice,continuum,ratio and {quantity, passed, final_ratio}.\n"
        }
        Command::OracleVerify => {
            "oracle-verify: Pfaffian formulas against brute-force enumeration over all even subgraphs\n\
             on random small domains: Z, spins, disorders, mixed correlators, 2- and 4-point fermions.\n\
             Exit 3 on any mismatch above --tolerance (default 1e-11).\n"
        }
    }
}
