import sys
import random

import pytest

from poplink.config import load_config
from poplink.ingest import RecordStore
from poplink.model import Certificate, CertificateType, IndividualRecord

B, D, M, C = CertificateType.BIRTH, CertificateType.DEATH, CertificateType.MARRIAGE, CertificateType.CENSUS


@pytest.fixture(scope="session")
def config():
    return load_config()


@pytest.fixture(scope="session")
def vocab(config):
    return config.vocabulary


def make_cert(vocab, cert_id, cert_type, year, rows):
    """rows: (role name, attribute dict[, entity id])."""
    members = []
    for k, row in enumerate(rows, 1):
        role, attrs = row[0], row[1]
        entity = row[2] if len(row) > 2 else None
        members.append(IndividualRecord(f"{cert_id}-{k}", cert_id, vocab.get(cert_type, role), attrs, entity))
    return Certificate(cert_id, cert_type, year, tuple(members))


def random_store(vocab, n_certs, seed, names=("ann", "anna", "john", "jon", "mary")):
    rng = random.Random(seed)
    certs = []
    for i in range(n_certs):
        t = rng.choice(list(CertificateType))
        roles = vocab.roles_of(t)
        rows = []
        for role in rng.sample(roles, rng.randint(1, min(3, len(roles)))):
            rows.append((role.name, {
                "first_name": rng.choice(names),
                "last_name": rng.choice(("smith", "smyth", "macleod")),
                "birth_year": str(rng.randint(1830, 1850)) if rng.random() < 0.7 else None,
            }))
        certs.append(make_cert(vocab, f"X{i:04d}", t, rng.randint(1850, 1900), rows))
    return RecordStore(certs)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
