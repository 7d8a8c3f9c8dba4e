"""Shared fixtures for the expensive oracle runs plus acceptance reporting."""

import numpy as np
import pytest

ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def record_acceptance(name: str, ok: bool, detail: str) -> None:
    """Remember one criterion outcome and print its pass/fail line."""
    ACCEPTANCE_RESULTS.append((name, ok, detail))
    print(f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} ({detail})",
          flush=True)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(
            f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")


@pytest.fixture(scope="session")
def exp1_dns():
    """Ground-truth trajectory of the dissipative benchmark at eps=1e-2."""
    from vshmm.problems import exp1_dissipative
    from vshmm.steppers import dns_integrate

    prob = exp1_dissipative(1e-2)
    return dns_integrate(prob.system, 1e-6, 5.0, 1e-2)


@pytest.fixture(scope="session")
def oscillator_dns():
    """Desk-scaled oscillator reference sampled at the macro interval."""
    from vshmm.problems import coupled_oscillators
    from vshmm.steppers import dns_integrate

    prob = coupled_oscillators(1e-2)
    return dns_integrate(prob.system, 1e-5, 8.0, 0.8)


@pytest.fixture(scope="session")
def diffusion_dns():
    """Full-grid diffusion reference: 2048 modes, micro step 1e-6, t <= 1."""
    from vshmm.problems import diffusion_problem
    from vshmm.spectral import pde_dns_integrate

    prob = diffusion_problem(2048)
    return pde_dns_integrate(prob, 1e-6, 1.0, 0.05)


@pytest.fixture(scope="session")
def advection_dns():
    """Full-grid advection reference: 1024 modes, step 1.6e-4, t <= 36."""
    from vshmm.problems import advection_problem
    from vshmm.spectral import pde_dns_integrate

    prob = advection_problem(1024)
    return pde_dns_integrate(prob, 1.6e-4, 36.0, 0.9)
