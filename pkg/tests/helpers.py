"""Shared builders for tests."""

import random

from nsbgp_lab.intra_as import AsInternal, Classifier, Dissemination, DisseminationKind, ExternalLink


def random_as(seed, n_routers=5, n_links=5, dissemination=None, mesh=False):
    """Connected random AS with offers on a random subset of its external links."""
    rng = random.Random(seed)
    routers = tuple(f"R{i}" for i in range(1, n_routers + 1))
    igp = {}
    for i in range(1, n_routers):
        igp[(routers[i], routers[rng.randrange(i)])] = rng.randint(1, 5)
    for i in range(n_routers):
        for j in range(i + 1, n_routers):
            if (routers[j], routers[i]) not in igp and rng.random() < 0.3:
                igp[(routers[i], routers[j])] = rng.randint(1, 5)
    links, offers = [], {}
    for k in range(n_links):
        router = rng.choice(routers)
        nbr = f"N{rng.randrange(max(2, n_links // 2))}"
        rel = rng.choice(("customer", "peer", "provider"))
        link_id = f"{router}-{nbr}-{k}"
        links.append(ExternalLink(link_id, router, nbr, rel))
        if rng.random() < 0.7:
            offers[link_id] = (nbr,) + tuple(f"X{rng.randrange(3)}" for _ in range(rng.randrange(2))) + ("d",)
    diss = dissemination or Dissemination()
    if mesh:
        sessions = tuple((a, b) for i, a in enumerate(routers) for b in routers[i + 1:])
        diss = Dissemination(diss.kind, k=diss.k, class_best=diss.class_best, sessions=sessions)
    return AsInternal("X", routers, igp, tuple(links), offers, diss, Classifier())


def add_paths(k):
    return Dissemination(DisseminationKind.ADD_PATHS, k=k)
