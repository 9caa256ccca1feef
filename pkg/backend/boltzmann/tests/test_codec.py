import json
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from boltzmann.spectral import codec
from boltzmann.spectral.exceptions import FormatError


class ArrayCodecTest(SimpleTestCase):
    def test_complex_arrays_are_exact_in_both_encodings(self):
        rng = np.random.default_rng(0)
        array = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
        for encoding in codec.ENCODINGS:
            payload = codec.encode_array(array, encoding)
            self.assertEqual(payload["shape"], [2, 3])
            np.testing.assert_array_equal(codec.decode_array(payload), array)

    def test_hex_payload_is_text(self):
        payload = codec.encode_array(np.array([0.1]), "hex")
        self.assertEqual(payload["data"], [(0.1).hex()])

    def test_malformed_payloads(self):
        payload = codec.encode_array(np.zeros(4))
        with self.assertRaises(FormatError):
            codec.decode_array({**payload, "shape": [5]})
        with self.assertRaises(FormatError):
            codec.decode_array({**payload, "dtype": "int8"})
        with self.assertRaises(FormatError):
            codec.decode_array({"shape": [1]})
        with self.assertRaises(FormatError):
            codec.encode_array(np.zeros(1), "base64")


class DocumentTest(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.root = Path(self.tmp.name)

    def test_header_checks(self):
        document = codec.make_document("kernel", M_total=1)
        self.assertIs(codec.check_document(document, "kernel"), document)
        with self.assertRaises(FormatError):
            codec.check_document(document, "checkpoint")
        with self.assertRaises(FormatError):
            codec.check_document({**document, "format_version": 2})
        with self.assertRaises(FormatError):
            codec.check_document({"kind": "kernel"})

    def test_non_finite_values_are_written_as_null(self):
        document = codec.make_document("report", loss=float("nan"), value=np.float64(2.5), items=(1, np.int64(2)))
        path = codec.write_document(self.root / "nested" / "report.json", document)
        raw = json.loads(path.read_text())
        self.assertIsNone(raw["loss"])
        self.assertEqual(raw["value"], 2.5)
        self.assertEqual(raw["items"], [1, 2])
        self.assertEqual(codec.read_document(path, "report")["kind"], "report")

    def test_read_rejects_invalid_json(self):
        path = self.root / "broken.json"
        path.write_text("{not json")
        with self.assertRaises(FormatError):
            codec.read_document(path)

    def test_write_requires_a_header(self):
        with self.assertRaises(FormatError):
            codec.write_document(self.root / "bare.json", {"kind": "report"})
