"""
Rigidity pipeline service: runs one CLI command and assembles its report
"""

import logging
import time
from contextlib import contextmanager
from typing import Dict, List, Optional, Tuple

import numpy as np

from cone_rigidity.models import AnyBlock
from cone_rigidity.schemas import (
    AuditSection,
    BlockAuditEntry,
    BlockEntry,
    BranchReport,
    GeometryReport,
    IdentityEntry,
    QuantityEntry,
    RootEntry,
    RunConfig,
    RunReport,
    SolveEntry,
)
from cone_rigidity.schemas.report_schemas import complex_vector, finite_or_none
from cone_rigidity.services.indicial import indicial_roots, verify_roots
from cone_rigidity.services.l2class import L2Report, classify_block
from cone_rigidity.services.modes import (
    circle_cross_section_modes,
    load_cross_section_modes,
    radial_operator,
    sorted_blocks,
)
from cone_rigidity.services.solver import (
    RhsFunction,
    graded_mesh,
    kernel_audit,
    manufactured_profile,
    manufactured_rhs,
    solve_field,
)
from cone_rigidity.services.verify import (
    IDENTITIES,
    ONE_FORM,
    TENSOR2,
    TWO_FORM,
    ChartGrid,
    adjointness_defect,
    identity_convergence,
    poincare_2form_check,
    sample_field,
)
from cone_rigidity.utils.errors import EXIT_INTERNAL, EXIT_OK, EXIT_WITNESS

COMMANDS = ("modes", "indicial", "classify", "audit", "solve", "verify")
ORDER_TARGET = 2.0
ORDER_TOLERANCE = 0.3
N4_IDENTITIES = ("W1", "WS")


def branch_report(report: L2Report) -> BranchReport:
    return BranchReport(
        block=report.block.label,
        exponent=float(report.branch.exponent),
        family=report.branch.family,
        logarithmic=report.branch.logarithmic,
        admissible=report.admissible,
        nabla_route=report.nabla_route,
        d_delta_route=report.d_delta_route,
        quantities={
            name: QuantityEntry(
                exponent=finite_or_none(q.exponent),
                log=bool(q.log),
                in_l2=bool(q.in_l2),
                rule_exponent=finite_or_none(q.rule_exponent),
                rule_exact=q.rule_exact,
            )
            for name, q in report.quantities.items()
        },
    )


def bump_rhs(a: float, m: int) -> RhsFunction:
    """Smooth bump on (a/4, 3a/4) in the first component"""
    lo, hi = 0.25 * a, 0.75 * a

    def rhs(r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        inside = (r > lo) & (r < hi)
        profile = np.where(inside, ((r - lo) * (hi - r) / ((hi - lo) / 2) ** 2) ** 4, 0.0)
        values = np.zeros((r.size, m), dtype=complex)
        values[:, 0] = profile
        return values

    return rhs


class RigidityPipeline:
    """Service running the modes/indicial/classify/audit/solve/verify commands"""

    def __init__(self, config: RunConfig):
        self.logger = logging.getLogger(__name__)
        self.config = config
        self.geometry = config.geometry.to_geometry()
        self.timings: Dict[str, float] = {}

    @contextmanager
    def _stage(self, name: str):
        started = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = time.perf_counter() - started

    def blocks(self) -> List[AnyBlock]:
        """Selected block, eigendata blocks, or the generated circle blocks"""
        selected = self.config.block.to_block()
        if selected is not None:
            return [selected]
        if self.config.geometry.eigendata:
            return sorted_blocks(load_cross_section_modes(self.config.geometry.eigendata))
        if self.geometry.n == 3:
            bounds = self.config.modes
            return circle_cross_section_modes(self.geometry, bounds.p_max, bounds.q_max)
        raise ValueError("n >= 4 needs an eigendata file or an explicit --block")

    def run(self, command: str) -> Tuple[RunReport, int]:
        if command not in COMMANDS:
            raise ValueError(f"Unknown command: {command}")
        self.logger.info(f"Running {command} (n={self.geometry.n}, beta={self.geometry.beta})")
        report = RunReport(
            command=command,
            config_echo=self.config.echo(),
            geometry=GeometryReport.from_geometry(self.geometry),
        )
        with self._stage("total"):
            exit_code = getattr(self, f"_run_{command}")(report)
        if self.config.output.timings:
            report.timings = dict(sorted(self.timings.items()))
        return report, exit_code

    def _block_entries(self, blocks: List[AnyBlock]) -> List[BlockEntry]:
        return [BlockEntry.from_block(b, self.geometry.beta) for b in blocks]

    def _run_modes(self, report: RunReport) -> int:
        with self._stage("modes"):
            report.blocks = self._block_entries(self.blocks())
        report.summary = {"block_count": len(report.blocks)}
        return EXIT_OK

    def _run_indicial(self, report: RunReport) -> int:
        beta = self.geometry.beta
        blocks = self.blocks()
        report.blocks = self._block_entries(blocks)
        with self._stage("indicial"):
            for block in blocks:
                roots = indicial_roots(block, beta)
                verify_roots(block, beta, roots)
                report.roots += [
                    RootEntry(
                        block=block.label,
                        k=float(root.k),
                        multiplicity=root.multiplicity,
                        log_required=root.log_required,
                        families=list(root.families),
                        leading_vectors=[complex_vector(v) for v in root.leading_space],
                    )
                    for root in roots
                ]
        return EXIT_OK

    def _run_classify(self, report: RunReport) -> int:
        blocks = self.blocks()
        report.blocks = self._block_entries(blocks)
        order = self.config.solver.order
        witnesses = 0
        dimensions = {}
        with self._stage("classify"):
            for block in blocks:
                reports = classify_block(block, self.geometry, order, skip_unsupported=True)
                dimensions[block.label] = sum(r.admissible for r in reports)
                witnesses += sum(r.admissible and not r.quantities["grad_u"].in_l2 for r in reports)
                report.reports += [branch_report(r).model_dump(mode="json") for r in reports]
        report.summary = {"admissible_dimension": dimensions, "failure_witnesses": witnesses}
        if witnesses:
            self.logger.warning(f"{witnesses} admissible branches with grad u outside L2")
            return EXIT_WITNESS
        return EXIT_OK

    def _mesh(self):
        solver = self.config.solver
        return graded_mesh(self.geometry.tube_radius, solver.mesh_points, solver.grading)

    def _run_audit(self, report: RunReport) -> int:
        blocks = self.blocks()
        report.blocks = self._block_entries(blocks)
        mesh = self._mesh() if self.geometry.beta > 1 else None
        with self._stage("audit"):
            audit = kernel_audit(self.geometry, blocks, mesh, self.config.solver.order)
        report.audit = AuditSection(
            mode=audit.mode,
            verdict=audit.verdict,
            kernel_free=audit.kernel_free,
            blocks=[
                BlockAuditEntry(
                    block=b.block.label,
                    admissible_dimension=b.admissible_dimension,
                    total_branches=b.total_branches,
                    admissible_exponents=[float(k) for k in b.admissible_exponents],
                    eigmin=finite_or_none(b.eigmin),
                    kernel_empty=b.kernel_empty,
                )
                for b in audit.blocks
            ],
            failure_witnesses=[branch_report(r) for r in audit.failure_witnesses],
            log_mode_witnesses=[branch_report(r) for r in audit.log_mode_witnesses],
        )
        if audit.mode == "witness":
            return EXIT_WITNESS if audit.failure_witnesses else EXIT_OK
        if not audit.kernel_free:
            self.logger.error(f"Audit could not certify positivity: {audit.verdict}")
            return EXIT_INTERNAL
        return EXIT_OK

    def _run_solve(self, report: RunReport) -> int:
        blocks = self.blocks()
        report.blocks = self._block_entries(blocks)
        a = self.geometry.tube_radius
        kind = self.config.solver.rhs
        mesh = self._mesh()
        u0, du0, d2u0 = manufactured_profile(a)

        rhs: List[Optional[RhsFunction]] = []
        for block in blocks:
            if kind == "zero":
                rhs.append(None)
            elif kind == "bump":
                rhs.append(bump_rhs(a, block.size))
            else:
                op = radial_operator(self.geometry, block)
                rhs.append(manufactured_rhs(op, u0, du0, d2u0))

        with self._stage("solve"):
            solution = solve_field(self.geometry, blocks, rhs, mesh)

        exact = u0(mesh.nodes)
        for s in solution.solutions:
            max_error = None
            if kind == "manufactured":
                max_error = float(np.max(np.abs(s.values[:, 0] - exact)))
            entry = SolveEntry(
                block=s.block.label,
                solution_norm=s.solution_norm,
                rhs_norm=s.rhs_norm,
                residual_norm=s.residual_norm,
                linear_residual=s.linear_residual,
                eigmin=finite_or_none(s.eigmin),
                max_abs=s.max_abs,
                max_error=max_error,
                inner_match_residual=None if s.inner_match is None else s.inner_match.relative_residual,
            )
            report.reports.append(entry.model_dump(mode="json"))
        report.summary = {
            "rhs": kind,
            "solution_norm": solution.solution_norm,
            "rhs_norm": solution.rhs_norm,
            "shift": solution.shift,
            "bound_holds": solution.bound_holds,
        }
        return EXIT_OK if solution.bound_holds else EXIT_INTERNAL

    def _run_verify(self, report: RunReport) -> int:
        options = self.config.verify
        grid = ChartGrid.default(self.geometry, r_bounds=tuple(options.r_bounds))
        names = options.identities or (list(IDENTITIES) if grid.n == 3 else list(N4_IDENTITIES))
        failures = 0
        with self._stage("identities"):
            for name in names:
                for offset in range(options.samples):
                    seed = options.seed + offset
                    study = identity_convergence(name, grid, seed=seed, levels=options.levels)
                    within = study.order is None or abs(study.order - ORDER_TARGET) <= ORDER_TOLERANCE
                    failures += not within
                    report.reports.append(
                        IdentityEntry(
                            identity=name,
                            n=grid.n,
                            seed=seed,
                            residuals=study.residuals,
                            order=study.order,
                            within_tolerance=within,
                        ).model_dump(mode="json")
                    )

        with self._stage("poincare"):
            checks = [
                poincare_2form_check(
                    sample_field(TWO_FORM, grid, np.random.default_rng(options.seed + offset)), grid
                )
                for offset in range(options.samples)
            ]
        with self._stage("adjointness"):
            rng = np.random.default_rng(options.seed)
            alpha = sample_field(ONE_FORM, grid, rng)
            defects = {
                "nabla": adjointness_defect("nabla", alpha, sample_field(TENSOR2, grid, rng), grid),
                "d": adjointness_defect("d", alpha, sample_field(TWO_FORM, grid, rng), grid),
            }

        report.summary = {
            "identity_failures": failures,
            "poincare": {
                "constant": checks[0].constant,
                "satisfied": all(c.satisfied for c in checks),
                "max_ratio": max(c.lhs / c.rhs if c.rhs > 0 else 0.0 for c in checks),
            },
            "adjointness_defect": defects,
        }
        if failures:
            self.logger.error(f"{failures} identity studies outside order {ORDER_TARGET} ± {ORDER_TOLERANCE}")
            return EXIT_INTERNAL
        return EXIT_OK
