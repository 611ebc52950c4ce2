"""Compilation of local assertions into positive modal formulae.

Output choices assert their predicate and step through the update modality;
input choices use the predicate as hypothesis, then step through the update
modality so the formula tracks the observable update transition the process
performs after receiving.  Recursion maps to the formula-level recursion
operator.
"""

from __future__ import annotations

from .kernel import (
    AcceptPat, Branch, Conj, EndA, Formula, ForallF, FVar, Implies,
    InPat, KernelError, LocalAssertion, Mu, Must, OutPat, PredF, RecA,
    RecCallA, Select, SessionRole, SessionSort, Tru, UpdPat, conj,
)


class EmbeddingError(Exception):
    pass


def embed(assertion: LocalAssertion, at: SessionRole,
          _bound: frozenset = frozenset()) -> Formula:
    """Embed a local assertion at session-role ``at``."""
    s, p = at.session, at.role
    if isinstance(assertion, EndA):
        return Tru()
    if isinstance(assertion, Select):
        q = assertion.partner
        parts = []
        for b in assertion.branches:
            body = Conj(PredF(b.pred),
                        Must(UpdPat(b.update), embed(b.cont, at, _bound)))
            parts.append(ForallF(b.var, b.sort,
                                 Must(OutPat(s, p, q, b.var), body)))
        return conj(parts)
    if isinstance(assertion, Branch):
        q = assertion.partner
        parts = []
        for b in assertion.branches:
            body = Implies(b.pred,
                           Must(UpdPat(b.update), embed(b.cont, at, _bound)))
            parts.append(ForallF(b.var, b.sort,
                                 Must(InPat(s, q, p, b.var), body)))
        return conj(parts)
    if isinstance(assertion, RecA):
        return Mu(assertion.var, embed(assertion.body, at,
                                       _bound | {assertion.var}))
    if isinstance(assertion, RecCallA):
        if assertion.var not in _bound:
            raise EmbeddingError(f"unbound recursion variable {assertion.var}")
        return FVar(assertion.var)
    raise KernelError(f"unknown assertion node {assertion!r}")


def embed_env_entry(shared: str, table: dict[str, LocalAssertion],
                    sess_var: str = "s'") -> Formula:
    """Formula for a shared channel: whenever a session-role is received on
    the channel, the continuation satisfies that role's embedding.  The
    quantifier over roles expands to a finite conjunction."""
    if not table:
        raise EmbeddingError(f"empty role table for shared name {shared}")
    parts = []
    for role, assertion in table.items():
        inner = embed(assertion, SessionRole(sess_var, role))
        parts.append(Must(AcceptPat(shared, sess_var, role), inner))
    return ForallF(sess_var, SessionSort(), conj(parts))
