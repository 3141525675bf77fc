"""
Сервис генерации моделей: воксельная модель головы (конечные объемы)
и синтетическая система, а также моделирование измерений.
"""
import logging
from typing import Sequence

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from exceptions import ConfigurationError, GenerationError
from models.conductivity import ConductivityPoint, MultiplierSpec
from models.specs import MiniHeadSpec, SynthSpec, cell_depth, face_pairs
from models.system import Deflation, ParametrizedSystem
from services.numerics_service import NumericsService

logger = logging.getLogger(__name__)


class GeneratorService:
    """Сервис для построения параметризованных систем"""

    @staticmethod
    def region_laplacians(spec: MiniHeadSpec) -> np.ndarray:
        """
        Целочисленные лапласианы графа ячеек по областям.
        Грань между областями относится к внутренней области (меньшая метка).

        Returns:
            Массив N_C×N_V×N_V
        """
        labels = spec.compartment_map.ravel()
        n_cells = spec.n_cells
        pairs = face_pairs(spec.grid_shape)
        first = np.concatenate([a for a, _, _ in pairs])
        second = np.concatenate([b for _, b, _ in pairs])

        adjacency = sparse.coo_matrix((np.ones(first.size), (first, second)), shape=(n_cells, n_cells))
        n_parts, _ = connected_components(adjacency, directed=False)
        if n_parts != 1:
            raise GenerationError(f"область несвязна ({n_parts} компонент)", field="mini_head.compartment_map")

        owner = np.minimum(labels[first], labels[second])
        laplacians = np.zeros((spec.n_compartments, n_cells, n_cells))
        for region in range(1, spec.n_compartments + 1):
            mask = owner == region
            a, b = first[mask], second[mask]
            ones = np.ones(a.size)
            rows = np.concatenate([a, b, a, b])
            cols = np.concatenate([a, b, b, a])
            data = np.concatenate([ones, ones, -ones, -ones])
            laplacians[region - 1] = sparse.coo_matrix((data, (rows, cols)), shape=(n_cells, n_cells)).toarray()
        return laplacians

    @staticmethod
    def build_mini_head(spec: MiniHeadSpec) -> ParametrizedSystem:
        """
        Строит систему для воксельной модели: H̄_r = h·Λ_r, γ_r = σ_r,
        компонента дефляции c·wwᵀ, D̄_1 из пар монополей ±1/h, λ_1 = 1.

        Args:
            spec: Спецификация модели

        Returns:
            Параметризованная система
        """
        spec.validate()
        h = spec.spacing
        n_cells = spec.n_cells
        components = GeneratorService.region_laplacians(spec)
        components *= h

        sources = np.zeros((n_cells, len(spec.source_pairs)))
        for column, (a, b) in enumerate(spec.source_pairs):
            sources[a, column] = 1.0 / h
            sources[b, column] = -1.0 / h

        selection = np.zeros((len(spec.electrode_cells), n_cells))
        selection[np.arange(len(spec.electrode_cells)), spec.electrode_cells] = 1.0

        grid = spec.domain_grid()
        reference = grid.center()
        undeflated = np.tensordot(reference.values, components, axes=1)
        vector = np.full(n_cells, 1.0 / np.sqrt(n_cells))
        scale = float(np.trace(undeflated) / n_cells)
        deflation = Deflation(vector, scale, spec.n_compartments)

        h_components = [(components[r], MultiplierSpec.sigma(r)) for r in range(spec.n_compartments)]
        h_components.append((deflation.matrix(), MultiplierSpec.constant(1.0)))

        depth = cell_depth(spec.grid_shape).ravel()
        metadata = {
            "generator": "mini_head",
            "spec": spec.to_dict(),
            "sigma_ref": list(reference.as_tuple()),
            "electrodes": list(spec.electrode_cells),
            "sources": [
                {
                    "cells": [a, b],
                    "axis": int(np.argmax(np.abs(np.subtract(np.unravel_index(b, spec.grid_shape),
                                                             np.unravel_index(a, spec.grid_shape))))),
                    "depth": int(min(depth[a], depth[b]))
                }
                for a, b in spec.source_pairs
            ]
        }
        system = ParametrizedSystem(
            h_components=h_components,
            d_components=[(sources, MultiplierSpec.constant(1.0))],
            selection=selection,
            n_compartments=spec.n_compartments,
            deflation=deflation,
            domain=list(grid.axes),
            compartment_names=spec.names,
            metadata=metadata
        )
        logger.info(
            f"Модель головы построена: сетка {spec.grid_shape}, N_V={n_cells}, "
            f"N_E={system.n_electrodes}, N_S={system.n_sources}"
        )
        return system

    @staticmethod
    def gamma_specs(spec: SynthSpec):
        specs = []
        for family in spec.gamma_family:
            if family == "sigma":
                specs += [MultiplierSpec.sigma(i) for i in range(spec.n_compartments)]
            elif family == "inverse":
                specs += [MultiplierSpec.inverse(i) for i in range(spec.n_compartments)]
            elif family == "pair_sum":
                specs += [MultiplierSpec.pair_sum(i, j)
                          for i in range(spec.n_compartments) for j in range(i + 1, spec.n_compartments)]
            elif family == "constant":
                specs.append(MultiplierSpec.constant(1.0))
        return specs

    @staticmethod
    def lambda_specs(spec: SynthSpec):
        specs = []
        for family in spec.lambda_family:
            if family == "one":
                specs.append(MultiplierSpec.constant(1.0))
            elif family == "sigma":
                specs += [MultiplierSpec.sigma(i) for i in range(spec.n_compartments)]
        return specs

    @staticmethod
    def build_synthetic(spec: SynthSpec) -> ParametrizedSystem:
        """
        Синтетическая система: H̄_i = B_iᵀB_i + floor·I/N_H, случайные D̄_j и S.
        Детерминирована при фиксированном зерне.

        Args:
            spec: Спецификация

        Returns:
            Параметризованная система без дефляции
        """
        spec.validate()
        rng = np.random.default_rng(spec.seed)
        n_v = spec.n_unknowns
        gammas = GeneratorService.gamma_specs(spec)
        lambdas = GeneratorService.lambda_specs(spec)
        floor = spec.conditioning_floor * np.eye(n_v) / len(gammas)

        h_components = []
        for multiplier in gammas:
            factor = rng.standard_normal((n_v, n_v)) / np.sqrt(n_v)
            component = factor.T @ factor
            h_components.append((0.5 * (component + component.T) + floor, multiplier))

        d_components = [(rng.standard_normal((n_v, spec.n_sources)), multiplier) for multiplier in lambdas]

        rows = np.sort(rng.choice(n_v, size=spec.n_electrodes, replace=False))
        selection = np.zeros((spec.n_electrodes, n_v))
        selection[np.arange(spec.n_electrodes), rows] = 1.0

        system = ParametrizedSystem(
            h_components=h_components,
            d_components=d_components,
            selection=selection,
            n_compartments=spec.n_compartments,
            domain=spec.domain_axes(),
            metadata={"generator": "synthetic", "spec": spec.to_dict(), "electrodes": rows.tolist()}
        )
        logger.info(f"Синтетическая система построена: N_V={n_v}, N_H={system.n_h}, N_D={system.n_d}")
        return system

    @staticmethod
    def _check_source(system: ParametrizedSystem, source_index: int):
        if not 0 <= source_index < system.n_sources:
            raise ConfigurationError(f"индекс источника вне диапазона 0..{system.n_sources - 1}", field="source")

    @staticmethod
    def simulate_measurement(
        system: ParametrizedSystem,
        sigma: ConductivityPoint,
        source_index: int,
        amplitude: float = 1.0,
        noise_std: float = 0.0,
        seed: int = 0
    ) -> np.ndarray:
        """
        Топография одного диполя: y = a·L(σ*)[:, j] + шум.

        Args:
            system: Параметризованная система
            sigma: Проводимости σ*
            source_index: Индекс источника j
            amplitude: Амплитуда a
            noise_std: СКО гауссова шума
            seed: Зерно шума

        Returns:
            Вектор длины N_E
        """
        GeneratorService._check_source(system, source_index)
        column = NumericsService.exact_leadfield(system, sigma)[:, source_index]
        topography = amplitude * column
        if noise_std > 0:
            topography = topography + np.random.default_rng(seed).normal(0.0, noise_std, topography.size)
        return topography

    @staticmethod
    def simulate_series(
        system: ParametrizedSystem,
        sigma: ConductivityPoint,
        source_index: int,
        amplitudes: Sequence[float],
        noise_std: float = 0.0,
        seed: int = 0
    ) -> np.ndarray:
        """
        Серия из T топографий одного источника с амплитудами a(t);
        шум каждого отсчета времени порождается своим потоком от общего зерна.

        Returns:
            Матрица N_E×T
        """
        GeneratorService._check_source(system, source_index)
        if len(amplitudes) < 1:
            raise ConfigurationError("нужна хотя бы одна амплитуда", field="amplitudes")
        column = NumericsService.exact_leadfield(system, sigma)[:, source_index]
        series = np.outer(column, np.asarray(amplitudes, dtype=np.float64))
        if noise_std > 0:
            streams = np.random.SeedSequence(seed).spawn(len(amplitudes))
            for t, stream in enumerate(streams):
                series[:, t] += np.random.default_rng(stream).normal(0.0, noise_std, column.size)
        return series
