"""Certificate CSV parsing, value cleaning and the common-schema record store."""

from __future__ import annotations

import csv
import io
import logging
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from .model import Certificate, CertificateType, IndividualRecord, RoleType, RoleVocabulary

log = logging.getLogger(__name__)

COMMON_ATTRIBUTES = (
    "first_name",
    "last_name",
    "gender",
    "age",
    "birth_year",
    "address",
    "occupation",
    "relationship",
)
MANDATORY_COLUMNS = ("certificate_id", "event_year", "role")
STORE_COLUMNS = ("record_id", "certificate_id", "cert_type", "event_year", "role", "entity_id")


class SchemaError(ValueError):
    pass


def _data_file(name: str) -> str:
    return resources.files("poplink").joinpath("data", name).read_text(encoding="utf-8")


def _read_table(text: str) -> list[list[str]]:
    rows = []
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        rows.append([c.strip() for c in line.split("\t")])
    return rows


@lru_cache(maxsize=None)
def default_gender_aliases() -> Mapping[str, str]:
    return {raw: std for raw, std in _read_table(_data_file("gender_aliases.tsv"))}


@lru_cache(maxsize=None)
def default_age_units() -> Mapping[str, float]:
    return {unit: float(per_year) for unit, per_year in _read_table(_data_file("age_units.tsv"))}


_NEWBORN_WORDS = {"inf", "infant", "newborn", "new born", "baby"}
_AGE_RE = re.compile(r"(\d+(?:\.\d+)?)\s*([a-z]*)")
_DROP_CHARS = str.maketrans("", "", "'`’")


def _normalize_text(raw: str) -> str:
    text = unicodedata.normalize("NFKC", raw)
    text = "".join(" " if unicodedata.category(c)[0] == "C" else c for c in text)
    text = text.lower().translate(_DROP_CHARS)
    text = "".join(c if c.isalnum() or c.isspace() else " " for c in text)
    return " ".join(text.split())


def clean_age(text: str, units: Mapping[str, float] | None = None) -> Optional[str]:
    units = default_age_units() if units is None else units
    if text in _NEWBORN_WORDS:
        return "0"
    match = _AGE_RE.match(text)
    if not match:
        return None
    number = float(match.group(1))
    unit = match.group(2)
    per_year = 1.0 if not unit else units.get(unit)
    if per_year is None:
        return None
    return str(int(number / per_year))


def clean_value(
    attribute: str,
    raw: Optional[str],
    gender_aliases: Mapping[str, str] | None = None,
    age_units: Mapping[str, float] | None = None,
) -> Optional[str]:
    """Standardize one raw attribute value; returns ``None`` for an absent value.

    Text is lower-cased, apostrophes dropped, other punctuation and control
    characters turned into spaces and whitespace collapsed. Gender is mapped
    through the alias table to ``f``/``m`` and ages become whole years.
    """
    if raw is None:
        return None
    text = _normalize_text(raw)
    if not text:
        return None
    if attribute == "gender":
        aliases = default_gender_aliases() if gender_aliases is None else gender_aliases
        return aliases.get(text)
    if attribute == "age":
        return clean_age(text, age_units)
    if attribute == "birth_year":
        digits = text.split()[0]
        return digits if digits.isdigit() else None
    return text


def impute_birth_year(event_year: int, age: int) -> int:
    if age < 0:
        raise ValueError(f"negative age {age}")
    return event_year - age


class MappingSchema:
    """Maps source CSV columns to common attributes, per certificate type and role.

    ``overrides[(cert_type, role_name)]`` (role ``None`` for the whole type)
    maps source column to common attribute; unmapped columns named after a
    common attribute map to themselves, other columns are ignored.
    """

    def __init__(
        self,
        overrides: Mapping[tuple[CertificateType, Optional[str]], Mapping[str, str]] | None = None,
        attributes: Sequence[str] = COMMON_ATTRIBUTES,
    ):
        self.attributes = tuple(attributes)
        self.overrides = {k: dict(v) for k, v in (overrides or {}).items()}
        for key, mapping in self.overrides.items():
            for target in mapping.values():
                if target not in self.attributes:
                    raise SchemaError(f"mapping {key} targets unknown attribute {target!r}")

    def columns_for(self, cert_type: CertificateType, role: str, header: Sequence[str]) -> dict[str, str]:
        mapping = {c: c for c in header if c in self.attributes}
        mapping.update({k: v for k, v in self.overrides.get((cert_type, None), {}).items() if k in header})
        mapping.update({k: v for k, v in self.overrides.get((cert_type, role), {}).items() if k in header})
        return mapping


@dataclass
class IngestReport:
    rows_read: int = 0
    rows_accepted: int = 0
    rows_dropped: int = 0
    rejected: Counter = field(default_factory=Counter)
    certificates: int = 0

    @property
    def rows_rejected(self) -> int:
        return sum(self.rejected.values())

    def merge(self, other: "IngestReport") -> None:
        self.rows_read += other.rows_read
        self.rows_accepted += other.rows_accepted
        self.rows_dropped += other.rows_dropped
        self.rejected.update(other.rejected)
        self.certificates += other.certificates

    def to_text(self) -> str:
        lines = [
            f"rows_read = {self.rows_read}",
            f"rows_accepted = {self.rows_accepted}",
            f"rows_dropped = {self.rows_dropped}",
            f"rows_rejected = {self.rows_rejected}",
            f"certificates = {self.certificates}",
        ]
        for reason in sorted(self.rejected):
            lines.append(f"rejected.{reason} = {self.rejected[reason]}")
        return "\n".join(lines) + "\n"


def _parse_year(text: Optional[str]) -> Optional[int]:
    if text is None:
        return None
    text = text.strip()
    if re.fullmatch(r"\d{3,4}(\.0+)?", text):
        return int(float(text))
    return None


def parse_certificates(
    path: str | Path,
    cert_type: CertificateType,
    schema: MappingSchema,
    vocabulary: RoleVocabulary,
    *,
    drop_roles: Iterable[str] = ("Informant",),
    role_genders: Mapping[str, str] | None = None,
    newborn_roles: Iterable[str] = ("Baby",),
    report: IngestReport | None = None,
) -> list[Certificate]:
    """Read one certificate-type CSV (one row per individual) into certificates.

    Rows with an unknown role, an unparseable or inconsistent event year or
    a duplicate record id are rejected and counted in ``report``.
    """
    report = IngestReport() if report is None else report
    drop_roles = set(drop_roles)
    newborn_roles = set(newborn_roles)
    role_genders = dict(role_genders or {})
    groups: dict[str, list[IndividualRecord]] = {}
    years: dict[str, int] = {}
    seen_ids: set[str] = set()
    counters: Counter = Counter()

    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        for column in MANDATORY_COLUMNS:
            if column not in header:
                raise SchemaError(f"{path}: missing mandatory column {column!r}")
        for row in reader:
            report.rows_read += 1
            cert_id = (row.get("certificate_id") or "").strip()
            role_name = (row.get("role") or "").strip()
            if not cert_id:
                report.rejected["missing_certificate_id"] += 1
                continue
            if role_name in drop_roles:
                report.rows_dropped += 1
                continue
            role = vocabulary.get(cert_type, role_name)
            if role is None:
                report.rejected["unknown_role"] += 1
                continue
            year = _parse_year(row.get("event_year"))
            if year is None:
                report.rejected["bad_event_year"] += 1
                continue
            if years.setdefault(cert_id, year) != year:
                report.rejected["inconsistent_event_year"] += 1
                continue
            counters[cert_id] += 1
            record_id = (row.get("record_id") or "").strip() or f"{cert_id}-{counters[cert_id]}"
            if record_id in seen_ids:
                report.rejected["duplicate_record_id"] += 1
                continue
            seen_ids.add(record_id)
            attributes: dict[str, Optional[str]] = {}
            for column, target in schema.columns_for(cert_type, role_name, header).items():
                value = clean_value(target, row.get(column))
                if value is not None:
                    attributes[target] = value
            if "gender" not in attributes and role_name in role_genders:
                attributes["gender"] = role_genders[role_name]
            if "age" not in attributes and role_name in newborn_roles:
                attributes["age"] = "0"
            if "birth_year" not in attributes and "age" in attributes:
                attributes["birth_year"] = str(impute_birth_year(year, int(attributes["age"])))
            entity = (row.get("entity_id") or "").strip() or None
            groups.setdefault(cert_id, []).append(
                IndividualRecord(record_id, cert_id, role, attributes, entity)
            )
            report.rows_accepted += 1

    certificates = [Certificate(cid, cert_type, years[cid], tuple(members)) for cid, members in groups.items()]
    report.certificates += len(certificates)
    return certificates


class RecordStore:
    """All certificates and their individual records under one common schema."""

    def __init__(self, certificates: Iterable[Certificate], attributes: Sequence[str] = COMMON_ATTRIBUTES):
        self.attributes = tuple(attributes)
        certs = sorted(certificates, key=lambda c: c.certificate_id)
        self.certificates: dict[str, Certificate] = {}
        self.records: dict[str, IndividualRecord] = {}
        self.by_role: dict[RoleType, list[str]] = {}
        for cert in certs:
            if cert.certificate_id in self.certificates:
                raise ValueError(f"duplicate certificate id {cert.certificate_id}")
            self.certificates[cert.certificate_id] = cert
            for record in cert.members:
                if record.record_id in self.records:
                    raise ValueError(f"duplicate record id {record.record_id}")
                self.records[record.record_id] = record
                self.by_role.setdefault(record.role, []).append(record.record_id)

    def __len__(self) -> int:
        return len(self.records)

    def certificate_of(self, record_id: str) -> Certificate:
        return self.certificates[self.records[record_id].certificate_id]

    def event_year(self, record_id: str) -> int:
        return self.certificate_of(record_id).event_year

    def has_entity_ids(self) -> bool:
        return any(r.entity_id is not None for r in self.records.values())

    def to_tsv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, delimiter="\t", lineterminator="\n")
        writer.writerow(STORE_COLUMNS + self.attributes)
        for cert in self.certificates.values():
            for r in cert.members:
                writer.writerow(
                    [r.record_id, cert.certificate_id, cert.cert_type.value, cert.event_year, r.role.name, r.entity_id or ""]
                    + [r.get(a) or "" for a in self.attributes]
                )
        return buffer.getvalue()

    def write_tsv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_tsv(), encoding="utf-8")

    @classmethod
    def read_tsv(cls, path: str | Path, vocabulary: RoleVocabulary) -> "RecordStore":
        with open(path, newline="", encoding="utf-8") as handle:
            reader = csv.reader(handle, delimiter="\t")
            header = next(reader)
            attributes = tuple(header[len(STORE_COLUMNS):])
            groups: dict[str, list] = {}
            meta: dict[str, tuple[CertificateType, int]] = {}
            for row in reader:
                record_id, cert_id, cert_type, year, role_name, entity = row[: len(STORE_COLUMNS)]
                ctype = CertificateType.parse(cert_type)
                role = vocabulary.get(ctype, role_name)
                if role is None:
                    raise SchemaError(f"{path}: unknown role {role_name!r} for {cert_type}")
                values = {a: v for a, v in zip(attributes, row[len(STORE_COLUMNS):]) if v != ""}
                meta[cert_id] = (ctype, int(year))
                groups.setdefault(cert_id, []).append(
                    IndividualRecord(record_id, cert_id, role, values, entity or None)
                )
        certs = [Certificate(cid, meta[cid][0], meta[cid][1], tuple(m)) for cid, m in groups.items()]
        return cls(certs, attributes)


def ingest_files(
    paths: Mapping[CertificateType, str | Path],
    schema: MappingSchema,
    vocabulary: RoleVocabulary,
    **kwargs,
) -> tuple[RecordStore, IngestReport]:
    report = IngestReport()
    certificates: list[Certificate] = []
    for cert_type in sorted(paths, key=lambda t: t.order):
        part = IngestReport()
        certificates.extend(parse_certificates(paths[cert_type], cert_type, schema, vocabulary, report=part, **kwargs))
        log.info("ingested %s: %d certificates, %d rows rejected", cert_type.value, part.certificates, part.rows_rejected)
        report.merge(part)
    return RecordStore(certificates, schema.attributes), report
