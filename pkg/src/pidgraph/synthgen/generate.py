"""Procedural plan generator: place templates, route Manhattan lines, derive the exact graph."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..graph import BBox, DiagramGraph, EdgeClass, EdgeRecord, NodeKind, NodeRecord
from .templates import INK, PAPER, Template


class PlacementError(RuntimeError):
    pass


@dataclass(frozen=True)
class SynthConfig:
    canvas_width: int = 4500
    canvas_height: int = 7000
    n_symbols: int = 24
    dashed_fraction: float = 0.3
    extra_edge_fraction: float = 0.2
    min_symbol_gap: int = 200
    rng_seed: int = 0
    line_width: int = 3
    dash_on: int = 10
    dash_off: int = 6
    structural_box: float = 32.0
    box_clearance: int = 40
    route_clearance: int = 60
    min_leg: int = 60
    margin: int = 150
    knn: int = 5
    max_attempts: int = 20

    def __post_init__(self) -> None:
        if self.n_symbols < 2:
            raise ValueError("n_symbols must be >= 2")
        if not 0.0 <= self.dashed_fraction <= 1.0:
            raise ValueError("dashed_fraction must lie in [0, 1]")
        if self.extra_edge_fraction < 0:
            raise ValueError("extra_edge_fraction must be >= 0")
        if self.canvas_width <= 2 * self.margin or self.canvas_height <= 2 * self.margin:
            raise ValueError("canvas smaller than its margins")
        if self.min_symbol_gap < 0 or self.line_width < 1 or self.dash_on < 1 or self.dash_off < 1:
            raise ValueError("invalid drawing parameters")


_Leg = tuple[int, int, int, int]  # x0, y0, x1, y1, axis-aligned


@dataclass
class _Route:
    a: int
    b: int
    points: list[tuple[int, int]]
    solid: bool

    def legs(self) -> list[_Leg]:
        return [(*self.points[i], *self.points[i + 1]) for i in range(len(self.points) - 1)]


def _port_dir(t: Template, k: int) -> tuple[int, int]:
    p = t.ports[k]
    dists = {(-1, 0): p.x, (1, 0): t.width - p.x, (0, -1): p.y, (0, 1): t.height - p.y}
    return min(dists, key=dists.get)


def _rect_dist(a: tuple[float, float, float, float], b: tuple[float, float, float, float]) -> float:
    dx = max(0.0, max(a[0], b[0]) - min(a[2], b[2]))
    dy = max(0.0, max(a[1], b[1]) - min(a[3], b[3]))
    return math.hypot(dx, dy)


def _leg_rect(leg: _Leg) -> tuple[int, int, int, int]:
    x0, y0, x1, y1 = leg
    return min(x0, x1), min(y0, y1), max(x0, x1), max(y0, y1)


def _crossing(l1: _Leg, l2: _Leg) -> tuple[int, int] | None:
    """Proper crossing point of a horizontal and a vertical leg (interiors only)."""
    h1 = l1[1] == l1[3]
    h2 = l2[1] == l2[3]
    if h1 == h2:
        return None
    h, v = (l1, l2) if h1 else (l2, l1)
    hx0, hx1 = sorted((h[0], h[2]))
    vy0, vy1 = sorted((v[1], v[3]))
    x, y = v[0], h[1]
    if hx0 < x < hx1 and vy0 < y < vy1:
        return x, y
    return None


def _simplify(points: list[tuple[int, int]]) -> list[tuple[int, int]] | None:
    pts = [points[0]]
    for p in points[1:]:
        if p != pts[-1]:
            pts.append(p)
    out = [pts[0]]
    for i in range(1, len(pts) - 1):
        ax, ay = pts[i][0] - out[-1][0], pts[i][1] - out[-1][1]
        bx, by = pts[i + 1][0] - pts[i][0], pts[i + 1][1] - pts[i][1]
        if ax * by - ay * bx == 0:
            if ax * bx + ay * by < 0:
                return None  # doubles back on itself
            continue
        out.append(pts[i])
    out.append(pts[-1])
    if len(out) < 2:
        return None
    return out


class _Generator:
    def __init__(self, cfg: SynthConfig, templates: list[Template], rng: np.random.Generator):
        self.cfg = cfg
        self.templates = templates
        self.rng = rng

    # -- placement -------------------------------------------------------

    def place(self) -> tuple[list[Template], list[tuple[int, int]]]:
        cfg = self.cfg
        chosen: list[Template] = []
        origins: list[tuple[int, int]] = []
        boxes: list[tuple[int, int, int, int]] = []
        for _ in range(cfg.n_symbols):
            t = self.templates[int(self.rng.integers(len(self.templates)))]
            for _try in range(400):
                x = int(self.rng.integers(cfg.margin, cfg.canvas_width - cfg.margin - t.width))
                y = int(self.rng.integers(cfg.margin, cfg.canvas_height - cfg.margin - t.height))
                box = (x, y, x + t.width, y + t.height)
                if all(
                    max(box[0] - o[2], o[0] - box[2], box[1] - o[3], o[1] - box[3]) >= cfg.min_symbol_gap
                    for o in boxes
                ):
                    break
            else:
                raise PlacementError("could not place symbol without overlap")
            chosen.append(t)
            origins.append((x, y))
            boxes.append(box)
        return chosen, origins

    # -- connectivity ----------------------------------------------------

    def connections(self, centers: np.ndarray, capacity: list[int]) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
        n = len(centers)
        d = np.linalg.norm(centers[:, None, :] - centers[None, :, :], axis=2)
        k = min(self.cfg.knn, n - 1)
        cand = set()
        for i in range(n):
            for j in np.argsort(d[i], kind="stable")[1 : k + 1]:
                cand.add((min(i, int(j)), max(i, int(j))))
        cand_l = sorted(cand)
        weights = [d[i, j] * self.rng.uniform(0.5, 1.5) for i, j in cand_l]
        order = [cand_l[t] for t in np.argsort(weights, kind="stable")]

        parent = list(range(n))

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        used = [0] * n
        tree: list[tuple[int, int]] = []
        all_pairs = sorted(((d[i, j], i, j) for i in range(n) for j in range(i + 1, n)))
        for i, j in order + [(i, j) for _, i, j in all_pairs]:
            if len(tree) == n - 1:
                break
            ri, rj = find(i), find(j)
            if ri == rj or used[i] >= capacity[i] or used[j] >= capacity[j]:
                continue
            parent[ri] = rj
            used[i] += 1
            used[j] += 1
            tree.append((i, j))
        if len(tree) != n - 1:
            raise PlacementError("port capacity prevents a spanning tree")

        n_extra = int(round(self.cfg.extra_edge_fraction * n))
        in_tree = set(tree)
        pool = [p for p in cand_l if p not in in_tree]
        self.rng.shuffle(pool)
        extra = []
        for i, j in pool:
            if len(extra) >= n_extra:
                break
            if used[i] < capacity[i] and used[j] < capacity[j]:
                used[i] += 1
                used[j] += 1
                extra.append((i, j))
        tree.sort(key=lambda p: d[p])
        return tree, extra

    # -- routing ---------------------------------------------------------

    def _candidates(self, pa, da, pb, db):
        cfg = self.cfg
        lo, hi = cfg.min_leg, 3 * cfg.min_leg
        for _trial in range(4):
            la = int(self.rng.integers(lo, hi))
            lb = int(self.rng.integers(lo, hi))
            sa = (pa[0] + da[0] * la, pa[1] + da[1] * la)
            sb = (pb[0] + db[0] * lb, pb[1] + db[1] * lb)
            shapes = [
                [sa, (sb[0], sa[1]), sb],
                [sa, (sa[0], sb[1]), sb],
            ]
            if abs(sb[0] - sa[0]) >= 2 * cfg.min_leg:
                mx = int(self.rng.integers(min(sa[0], sb[0]) + cfg.min_leg, max(sa[0], sb[0]) - cfg.min_leg + 1))
                shapes.append([sa, (mx, sa[1]), (mx, sb[1]), sb])
            if abs(sb[1] - sa[1]) >= 2 * cfg.min_leg:
                my = int(self.rng.integers(min(sa[1], sb[1]) + cfg.min_leg, max(sa[1], sb[1]) - cfg.min_leg + 1))
                shapes.append([sa, (sa[0], my), (sb[0], my), sb])
            for s in self.rng.permutation(len(shapes)):
                pts = _simplify([pa] + shapes[int(s)] + [pb])
                if pts is not None:
                    yield pts

    def _valid(self, pts, a, b, boxes, routes: list[_Route]) -> bool:
        cfg = self.cfg
        legs = [(*pts[i], *pts[i + 1]) for i in range(len(pts) - 1)]
        last = len(legs) - 1
        lim = 20
        for x, y in pts:
            if not (lim <= x <= cfg.canvas_width - lim and lim <= y <= cfg.canvas_height - lim):
                return False
        for i, leg in enumerate(legs):
            r = _leg_rect(leg)
            if math.hypot(leg[2] - leg[0], leg[3] - leg[1]) < cfg.min_leg:
                return False
            for s, box in enumerate(boxes):
                if (s == a and i == 0) or (s == b and i == last):
                    continue
                if _rect_dist(r, box) < cfg.box_clearance:
                    return False
            for j in range(i + 2, len(legs)):
                if _rect_dist(r, _leg_rect(legs[j])) < cfg.route_clearance:
                    return False
        for other in routes:
            olegs = other.legs()
            olast = len(olegs) - 1
            for i, leg in enumerate(legs):
                ends_here = {a} if i == 0 else set()
                if i == last:
                    ends_here.add(b)
                r = _leg_rect(leg)
                for j, oleg in enumerate(olegs):
                    oends = {other.a} if j == 0 else set()
                    if j == olast:
                        oends.add(other.b)
                    if ends_here & oends:
                        continue  # stubs leaving the same symbol from different ports
                    c = _crossing(leg, oleg)
                    if c is not None:
                        for ex, ey in ((leg[0], leg[1]), (leg[2], leg[3]), (oleg[0], oleg[1]), (oleg[2], oleg[3])):
                            if math.hypot(c[0] - ex, c[1] - ey) < cfg.route_clearance:
                                return False
                    elif _rect_dist(r, _leg_rect(oleg)) < cfg.route_clearance:
                        return False
        return True

    def route(self, a, b, ports_a, ports_b, boxes, routes, free) -> _Route | None:
        pairs = []
        for ka, (pa, da) in enumerate(ports_a):
            if (a, ka) not in free:
                continue
            for kb, (pb, db) in enumerate(ports_b):
                if (b, kb) not in free:
                    continue
                dist = abs(pa[0] - pb[0]) + abs(pa[1] - pb[1])
                pairs.append((dist * self.rng.uniform(0.9, 1.1), ka, kb))
        pairs.sort()
        for _, ka, kb in pairs[:6]:
            pa, da = ports_a[ka]
            pb, db = ports_b[kb]
            for pts in self._candidates(pa, da, pb, db):
                if self._valid(pts, a, b, boxes, routes):
                    free.discard((a, ka))
                    free.discard((b, kb))
                    solid = bool(self.rng.random() >= self.cfg.dashed_fraction)
                    return _Route(a, b, pts, solid)
        return None

    def attempt(self) -> tuple[list[Template], list[tuple[int, int]], list[_Route]]:
        chosen, origins = self.place()
        boxes = [(x, y, x + t.width, y + t.height) for t, (x, y) in zip(chosen, origins)]
        ports = [
            [((int(round(x + p.x)), int(round(y + p.y))), _port_dir(t, k)) for k, p in enumerate(t.ports)]
            for t, (x, y) in zip(chosen, origins)
        ]
        centers = np.array([((bx0 + bx1) / 2.0, (by0 + by1) / 2.0) for bx0, by0, bx1, by1 in boxes])
        tree, extra = self.connections(centers, [len(p) for p in ports])
        free = {(s, k) for s in range(len(chosen)) for k in range(len(ports[s]))}
        routes: list[_Route] = []
        for a, b in tree:
            r = self.route(a, b, ports[a], ports[b], boxes, routes, free)
            if r is None:
                raise PlacementError("could not route a spanning-tree connection")
            routes.append(r)
        for a, b in extra:
            r = self.route(a, b, ports[a], ports[b], boxes, routes, free)
            if r is not None:
                routes.append(r)
        return chosen, origins, routes


def _build_graph(cfg: SynthConfig, chosen, origins, routes: list[_Route]) -> DiagramGraph:
    half = cfg.structural_box / 2.0
    nodes: list[NodeRecord] = []
    for i, (t, (x, y)) in enumerate(zip(chosen, origins)):
        nodes.append(NodeRecord(i, NodeKind.from_symbol(t.cls), BBox(x, y, x + t.width, y + t.height)))
    next_id = len(nodes)

    def new_node(kind: NodeKind, x: float, y: float) -> int:
        nonlocal next_id
        nodes.append(NodeRecord(next_id, kind, BBox(x - half, y - half, x + half, y + half)))
        next_id += 1
        return next_id - 1

    # crossings per (route, leg): list of (distance from leg start, node id)
    on_leg: dict[tuple[int, int], list[tuple[float, int]]] = {}
    legs = [r.legs() for r in routes]
    for i in range(len(routes)):
        for j in range(i + 1, len(routes)):
            for li, l1 in enumerate(legs[i]):
                for lj, l2 in enumerate(legs[j]):
                    c = _crossing(l1, l2)
                    if c is None:
                        continue
                    nid = new_node(NodeKind.CROSSING, *c)
                    on_leg.setdefault((i, li), []).append((abs(c[0] - l1[0]) + abs(c[1] - l1[1]), nid))
                    on_leg.setdefault((j, lj), []).append((abs(c[0] - l2[0]) + abs(c[1] - l2[1]), nid))

    edges: list[EdgeRecord] = []
    for i, r in enumerate(routes):
        cls = EdgeClass.SOLID if r.solid else EdgeClass.NON_SOLID
        seq = [r.a]
        for li in range(len(legs[i])):
            seq.extend(nid for _, nid in sorted(on_leg.get((i, li), [])))
            if li < len(legs[i]) - 1:
                seq.append(new_node(NodeKind.ANKLE, *r.points[li + 1]))
        seq.append(r.b)
        edges.extend(EdgeRecord(u, v, cls) for u, v in zip(seq, seq[1:]))
    return DiagramGraph(tuple(nodes), tuple(edges), float(cfg.canvas_width), float(cfg.canvas_height))


def _draw_leg(img: np.ndarray, leg: _Leg, solid: bool, cfg: SynthConfig) -> None:
    half = cfg.line_width // 2
    x0, y0, x1, y1 = leg
    length = abs(x1 - x0) + abs(y1 - y0)
    sx = (x1 > x0) - (x1 < x0)
    sy = (y1 > y0) - (y1 < y0)

    def span(s: int, e: int) -> None:
        ax, ay = x0 + sx * s, y0 + sy * s
        bx, by = x0 + sx * e, y0 + sy * e
        img[min(ay, by) - half : max(ay, by) + half + 1, min(ax, bx) - half : max(ax, bx) + half + 1] = INK

    if solid:
        span(0, length)
        return
    # whole number of dashes; gaps stretched so the leg starts and ends on a dash
    n = max(1, int(round((length + cfg.dash_off) / (cfg.dash_on + cfg.dash_off))))
    if n == 1:
        span(0, length)
        return
    gap = (length - n * cfg.dash_on) / (n - 1)
    for k in range(n):
        s = int(round(k * (cfg.dash_on + gap)))
        span(s, min(s + cfg.dash_on, length))


def render(cfg: SynthConfig, chosen, origins, routes: list[_Route]) -> np.ndarray:
    img = np.full((cfg.canvas_height, cfg.canvas_width), PAPER, dtype=np.uint8)
    for r in routes:
        for leg in r.legs():
            _draw_leg(img, leg, r.solid, cfg)
    for t, (x, y) in zip(chosen, origins):
        region = img[y : y + t.height, x : x + t.width]
        np.minimum(region, t.raster, out=region)
    return img


def generate_diagram(cfg: SynthConfig, templates: list[Template]) -> tuple[np.ndarray, DiagramGraph]:
    """Render one plan and its exact graph. Same config and templates give identical output."""
    if not templates:
        raise ValueError("need at least one template")
    rng = np.random.default_rng(cfg.rng_seed)
    gen = _Generator(cfg, list(templates), rng)
    last: Exception | None = None
    for _ in range(cfg.max_attempts):
        try:
            chosen, origins, routes = gen.attempt()
        except PlacementError as exc:
            last = exc
            continue
        return render(cfg, chosen, origins, routes), _build_graph(cfg, chosen, origins, routes)
    raise PlacementError(f"gave up after {cfg.max_attempts} attempts: {last}")
