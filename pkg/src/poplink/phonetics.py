"""Soundex and Double-Metaphone phonetic encoders.

Both encoders transliterate non-ASCII letters to ASCII first and are
case-insensitive. Double-Metaphone codes are not truncated.
"""

from __future__ import annotations

import unicodedata
from functools import lru_cache


def to_ascii(text: str) -> str:
    decomposed = unicodedata.normalize("NFKD", text)
    return decomposed.encode("ascii", "ignore").decode("ascii")


_SOUNDEX_DIGITS = {}
for _letters, _digit in (
    ("BFPV", "1"),
    ("CGJKQSXZ", "2"),
    ("DT", "3"),
    ("L", "4"),
    ("MN", "5"),
    ("R", "6"),
):
    for _ch in _letters:
        _SOUNDEX_DIGITS[_ch] = _digit


@lru_cache(maxsize=100_000)
def soundex(text: str) -> str:
    letters = [c for c in to_ascii(text).upper() if "A" <= c <= "Z"]
    if not letters:
        return ""
    first = letters[0]
    code = [first]
    last = _SOUNDEX_DIGITS.get(first, "")
    for ch in letters[1:]:
        digit = _SOUNDEX_DIGITS.get(ch)
        if digit is None:
            # H and W do not separate equal codes; vowels do
            if ch not in "HW":
                last = ""
            continue
        if digit != last:
            code.append(digit)
            if len(code) == 4:
                break
        last = digit
    return "".join(code).ljust(4, "0")


_VOWELS = frozenset("AEIOUY")


class _Encoder:
    """One Double-Metaphone pass over an upper-cased, space-padded word."""

    def __init__(self, word: str):
        self.length = len(word)
        self.last = self.length - 1
        self.s = word + "     "
        self.primary: list[str] = []
        self.secondary: list[str] = []
        self.slavo_germanic = any(t in word for t in ("W", "K", "CZ", "WITZ"))

    def at(self, i: int) -> str:
        if i < 0 or i >= len(self.s):
            return ""
        return self.s[i]

    def string_at(self, start: int, length: int, *options: str) -> bool:
        if start < 0:
            return False
        return self.s[start:start + length] in options

    def is_vowel(self, i: int) -> bool:
        return 0 <= i < self.length and self.s[i] in _VOWELS

    def add(self, main: str, alt: str | None = None) -> None:
        if alt is None:
            self.primary.append(main)
            self.secondary.append(main)
            return
        self.primary.append(main)
        if alt != " ":
            self.secondary.append(alt)

    def encode(self) -> tuple[str, str]:
        pos = 0
        if self.string_at(0, 2, "GN", "KN", "PN", "WR", "PS"):
            pos = 1
        if self.at(0) == "X":
            self.add("S")
            pos = 1
        while pos < self.length:
            ch = self.s[pos]
            handler = getattr(self, "_" + ch, None) if "A" <= ch <= "Z" else None
            if ch in _VOWELS:
                if pos == 0:
                    self.add("A")
                pos += 1
            elif handler is None:
                pos += 1
            else:
                pos = handler(pos)
        return "".join(self.primary), "".join(self.secondary)

    # one method per consonant; each returns the next position

    def _B(self, pos):
        self.add("P")
        return pos + 2 if self.at(pos + 1) == "B" else pos + 1

    def _C(self, pos):
        s = self
        if (
            pos > 1
            and not s.is_vowel(pos - 2)
            and s.string_at(pos - 1, 3, "ACH")
            and s.at(pos + 2) != "I"
            and (s.at(pos + 2) != "E" or s.string_at(pos - 2, 6, "BACHER", "MACHER"))
        ):
            s.add("K")
            return pos + 2
        if pos == 0 and s.string_at(pos, 6, "CAESAR"):
            s.add("S")
            return pos + 2
        if s.string_at(pos, 4, "CHIA"):
            s.add("K")
            return pos + 2
        if s.string_at(pos, 2, "CH"):
            if pos > 0 and s.string_at(pos, 4, "CHAE"):
                s.add("K", "X")
                return pos + 2
            if (
                pos == 0
                and (s.string_at(pos + 1, 5, "HARAC", "HARIS") or s.string_at(pos + 1, 3, "HOR", "HYM", "HIA", "HEM"))
                and not s.string_at(0, 5, "CHORE")
            ):
                s.add("K")
                return pos + 2
            if (
                s.string_at(0, 4, "VAN ", "VON ")
                or s.string_at(0, 3, "SCH")
                or s.string_at(pos - 2, 6, "ORCHES", "ARCHIT", "ORCHID")
                or s.string_at(pos + 2, 1, "T", "S")
                or (
                    (s.string_at(pos - 1, 1, "A", "O", "U", "E") or pos == 0)
                    and s.string_at(pos + 2, 1, "L", "R", "N", "M", "B", "H", "F", "V", "W", " ")
                )
            ):
                s.add("K")
            elif pos > 0:
                if s.string_at(0, 2, "MC"):
                    s.add("K")
                else:
                    s.add("X", "K")
            else:
                s.add("X")
            return pos + 2
        if s.string_at(pos, 2, "CZ") and not s.string_at(pos - 2, 4, "WICZ"):
            s.add("S", "X")
            return pos + 2
        if s.string_at(pos + 1, 3, "CIA"):
            s.add("X")
            return pos + 3
        if s.string_at(pos, 2, "CC") and not (pos == 1 and s.at(0) == "M"):
            if s.string_at(pos + 2, 1, "I", "E", "H") and not s.string_at(pos + 2, 2, "HU"):
                if (pos == 1 and s.at(pos - 1) == "A") or s.string_at(pos - 1, 5, "UCCEE", "UCCES"):
                    s.add("KS")
                else:
                    s.add("X")
                return pos + 3
            s.add("K")
            return pos + 2
        if s.string_at(pos, 2, "CK", "CG", "CQ"):
            s.add("K")
            return pos + 2
        if s.string_at(pos, 2, "CI", "CE", "CY"):
            if s.string_at(pos, 3, "CIO", "CIE", "CIA"):
                s.add("S", "X")
            else:
                s.add("S")
            return pos + 2
        s.add("K")
        if s.string_at(pos + 1, 2, " C", " Q", " G"):
            return pos + 3
        if s.string_at(pos + 1, 1, "C", "K", "Q") and not s.string_at(pos + 1, 2, "CE", "CI"):
            return pos + 2
        return pos + 1

    def _D(self, pos):
        s = self
        if s.string_at(pos, 2, "DG"):
            if s.string_at(pos + 2, 1, "I", "E", "Y"):
                s.add("J")
                return pos + 3
            s.add("TK")
            return pos + 2
        s.add("T")
        return pos + 2 if s.string_at(pos, 2, "DT", "DD") else pos + 1

    def _F(self, pos):
        self.add("F")
        return pos + 2 if self.at(pos + 1) == "F" else pos + 1

    def _G(self, pos):
        s = self
        nxt = s.at(pos + 1)
        if nxt == "H":
            if pos > 0 and not s.is_vowel(pos - 1):
                s.add("K")
                return pos + 2
            if pos == 0:
                s.add("J" if s.at(pos + 2) == "I" else "K")
                return pos + 2
            if (
                (pos > 1 and s.string_at(pos - 2, 1, "B", "H", "D"))
                or (pos > 2 and s.string_at(pos - 3, 1, "B", "H", "D"))
                or (pos > 3 and s.string_at(pos - 4, 1, "B", "H"))
            ):
                return pos + 2
            if pos > 2 and s.at(pos - 1) == "U" and s.string_at(pos - 3, 1, "C", "G", "L", "R", "T"):
                s.add("F")
            elif pos > 0 and s.at(pos - 1) != "I":
                s.add("K")
            return pos + 2
        if nxt == "N":
            if pos == 1 and s.is_vowel(0) and not s.slavo_germanic:
                s.add("KN", "N")
            elif not s.string_at(pos + 2, 2, "EY") and s.at(pos + 1) != "Y" and not s.slavo_germanic:
                s.add("N", "KN")
            else:
                s.add("KN")
            return pos + 2
        if s.string_at(pos + 1, 2, "LI") and not s.slavo_germanic:
            s.add("KL", "L")
            return pos + 2
        if pos == 0 and (
            nxt == "Y" or s.string_at(pos + 1, 2, "ES", "EP", "EB", "EL", "EY", "IB", "IL", "IN", "IE", "EI", "ER")
        ):
            s.add("K", "J")
            return pos + 2
        if (
            (s.string_at(pos + 1, 2, "ER") or nxt == "Y")
            and not s.string_at(0, 6, "DANGER", "RANGER", "MANGER")
            and not s.string_at(pos - 1, 1, "E", "I")
            and not s.string_at(pos - 1, 3, "RGY", "OGY")
        ):
            s.add("K", "J")
            return pos + 2
        if s.string_at(pos + 1, 1, "E", "I", "Y") or s.string_at(pos - 1, 4, "AGGI", "OGGI"):
            if s.string_at(0, 4, "VAN ", "VON ") or s.string_at(0, 3, "SCH") or s.string_at(pos + 1, 2, "ET"):
                s.add("K")
            elif s.string_at(pos + 1, 4, "IER "):
                s.add("J")
            else:
                s.add("J", "K")
            return pos + 2
        s.add("K")
        return pos + 2 if nxt == "G" else pos + 1

    def _H(self, pos):
        if (pos == 0 or self.is_vowel(pos - 1)) and self.is_vowel(pos + 1):
            self.add("H")
            return pos + 2
        return pos + 1

    def _J(self, pos):
        s = self
        if s.string_at(pos, 4, "JOSE") or s.string_at(0, 4, "SAN "):
            if (pos == 0 and s.at(pos + 4) == " ") or s.string_at(0, 4, "SAN "):
                s.add("H")
            else:
                s.add("J", "H")
            return pos + 1
        if pos == 0:
            s.add("J", "A")
        elif s.is_vowel(pos - 1) and not s.slavo_germanic and s.at(pos + 1) in ("A", "O"):
            s.add("J", "H")
        elif pos == s.last:
            s.add("J", " ")
        elif not s.string_at(pos + 1, 1, "L", "T", "K", "S", "N", "M", "B", "Z") and not s.string_at(
            pos - 1, 1, "S", "K", "L"
        ):
            s.add("J")
        return pos + 2 if s.at(pos + 1) == "J" else pos + 1

    def _K(self, pos):
        self.add("K")
        return pos + 2 if self.at(pos + 1) == "K" else pos + 1

    def _L(self, pos):
        s = self
        if s.at(pos + 1) == "L":
            if (pos == s.length - 3 and s.string_at(pos - 1, 4, "ILLO", "ILLA", "ALLE")) or (
                (s.string_at(s.last - 1, 2, "AS", "OS") or s.string_at(s.last, 1, "A", "O"))
                and s.string_at(pos - 1, 4, "ALLE")
            ):
                s.add("L", " ")
                return pos + 2
            s.add("L")
            return pos + 2
        s.add("L")
        return pos + 1

    def _M(self, pos):
        s = self
        self.add("M")
        if (s.string_at(pos - 1, 3, "UMB") and (pos + 1 == s.last or s.string_at(pos + 2, 2, "ER"))) or s.at(
            pos + 1
        ) == "M":
            return pos + 2
        return pos + 1

    def _N(self, pos):
        self.add("N")
        return pos + 2 if self.at(pos + 1) == "N" else pos + 1

    def _P(self, pos):
        if self.at(pos + 1) == "H":
            self.add("F")
            return pos + 2
        self.add("P")
        return pos + 2 if self.string_at(pos + 1, 1, "P", "B") else pos + 1

    def _Q(self, pos):
        self.add("K")
        return pos + 2 if self.at(pos + 1) == "Q" else pos + 1

    def _R(self, pos):
        s = self
        if (
            pos == s.last
            and not s.slavo_germanic
            and s.string_at(pos - 2, 2, "IE")
            and not s.string_at(pos - 4, 2, "ME", "MA")
        ):
            s.add("", "R")
        else:
            s.add("R")
        return pos + 2 if s.at(pos + 1) == "R" else pos + 1

    def _S(self, pos):
        s = self
        if s.string_at(pos - 1, 3, "ISL", "YSL"):
            return pos + 1
        if pos == 0 and s.string_at(pos, 5, "SUGAR"):
            s.add("X", "S")
            return pos + 1
        if s.string_at(pos, 2, "SH"):
            if s.string_at(pos + 1, 4, "HEIM", "HOEK", "HOLM", "HOLZ"):
                s.add("S")
            else:
                s.add("X")
            return pos + 2
        if s.string_at(pos, 3, "SIO", "SIA") or s.string_at(pos, 4, "SIAN"):
            if s.slavo_germanic:
                s.add("S")
            else:
                s.add("S", "X")
            return pos + 3
        if (pos == 0 and s.string_at(pos + 1, 1, "M", "N", "L", "W")) or s.string_at(pos + 1, 1, "Z"):
            s.add("S", "X")
            return pos + 2 if s.string_at(pos + 1, 1, "Z") else pos + 1
        if s.string_at(pos, 2, "SC"):
            if s.at(pos + 2) == "H":
                if s.string_at(pos + 3, 2, "OO", "ER", "EN", "UY", "ED", "EM"):
                    if s.string_at(pos + 3, 2, "ER", "EN"):
                        s.add("X", "SK")
                    else:
                        s.add("SK")
                    return pos + 3
                if pos == 0 and not s.is_vowel(3) and s.at(3) != "W":
                    s.add("X", "S")
                else:
                    s.add("X")
                return pos + 3
            if s.string_at(pos + 2, 1, "I", "E", "Y"):
                s.add("S")
                return pos + 3
            s.add("SK")
            return pos + 3
        if pos == s.last and s.string_at(pos - 2, 2, "AI", "OI"):
            s.add("", "S")
        else:
            s.add("S")
        return pos + 2 if s.string_at(pos + 1, 1, "S", "Z") else pos + 1

    def _T(self, pos):
        s = self
        if s.string_at(pos, 4, "TION"):
            s.add("X")
            return pos + 3
        if s.string_at(pos, 3, "TIA", "TCH"):
            s.add("X")
            return pos + 3
        if s.string_at(pos, 2, "TH") or s.string_at(pos, 3, "TTH"):
            if s.string_at(pos + 2, 2, "OM", "AM") or s.string_at(0, 4, "VAN ", "VON ") or s.string_at(0, 3, "SCH"):
                s.add("T")
            else:
                s.add("0", "T")
            return pos + 2
        s.add("T")
        return pos + 2 if s.string_at(pos + 1, 1, "T", "D") else pos + 1

    def _V(self, pos):
        self.add("F")
        return pos + 2 if self.at(pos + 1) == "V" else pos + 1

    def _W(self, pos):
        s = self
        if s.string_at(pos, 2, "WR"):
            s.add("R")
            return pos + 2
        if pos == 0 and (s.is_vowel(pos + 1) or s.string_at(pos, 2, "WH")):
            if s.is_vowel(pos + 1):
                s.add("A", "F")
            else:
                s.add("A")
        if (
            (pos == s.last and s.is_vowel(pos - 1))
            or s.string_at(pos - 1, 5, "EWSKI", "EWSKY", "OWSKI", "OWSKY")
            or s.string_at(0, 3, "SCH")
        ):
            s.add("", "F")
            return pos + 1
        if s.string_at(pos, 4, "WICZ", "WITZ"):
            s.add("TS", "FX")
            return pos + 4
        return pos + 1

    def _X(self, pos):
        s = self
        if not (
            pos == s.last and (s.string_at(pos - 3, 3, "IAU", "EAU") or s.string_at(pos - 2, 2, "AU", "OU"))
        ):
            s.add("KS")
        return pos + 2 if s.string_at(pos + 1, 1, "C", "X") else pos + 1

    def _Z(self, pos):
        s = self
        if s.at(pos + 1) == "H":
            s.add("J")
            return pos + 2
        if s.string_at(pos + 1, 2, "ZO", "ZI", "ZA") or (s.slavo_germanic and pos > 0 and s.at(pos - 1) != "T"):
            s.add("S", "TS")
        else:
            s.add("S")
        return pos + 2 if s.at(pos + 1) == "Z" else pos + 1


@lru_cache(maxsize=100_000)
def double_metaphone(text: str) -> tuple[str, str]:
    """Return ``(primary, alternate)`` codes; the alternate equals the primary when no rule forks."""
    word = to_ascii(text).upper().strip()
    if not word:
        return "", ""
    return _Encoder(word).encode()


def encode(value: str, encoding: str) -> str:
    if encoding == "none":
        return value
    if encoding == "soundex":
        return soundex(value)
    if encoding == "double_metaphone_primary":
        return double_metaphone(value)[0]
    if encoding == "double_metaphone_alternate":
        return double_metaphone(value)[1]
    raise ValueError(f"unknown phonetic encoding {encoding!r}")


ENCODINGS = ("none", "soundex", "double_metaphone_primary", "double_metaphone_alternate")
