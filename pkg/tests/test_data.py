import numpy as np
import pytest

from fedscreen.data import (
    Dataset,
    RawTable,
    drop_columns,
    drop_missing,
    encode_categorical,
    kfold_plan,
    load_csv,
    load_dataset,
    merge_datasets,
    partition_clients,
    save_dataset,
    synthesize_behavioral,
    train_test_split,
)
from fedscreen.errors import InputError
from fedscreen.landmarks import DistanceFeatures


def write_csv(path, text):
    path.write_text(text)
    return path


def make_distances(labels, seed=0):
    rng = np.random.default_rng(seed)
    return [
        DistanceFeatures(
            image_id=f"img{i}",
            class_label=int(c),
            brow_distance=float(rng.uniform(30, 60)),
            eye_distance=float(rng.uniform(60, 120)),
            nose_lips_distance=float(rng.uniform(40, 80)),
        )
        for i, c in enumerate(labels)
    ]


class TestLoadCsv:
    def test_basic_parse(self, tmp_path):
        p = write_csv(tmp_path / "t.csv", "a,b,class\n1,x,Yes\n2,y,No\n")
        table = load_csv(p, "class")
        assert table.n_rows == 2
        assert table.feature_names == ["a", "b"]
        assert table.labels == ["Yes", "No"]

    def test_ragged_row_reported(self, tmp_path):
        p = write_csv(tmp_path / "t.csv", "a,b,class\n1,x,Yes\n2,No\n")
        with pytest.raises(InputError, match="row 2"):
            load_csv(p, "class")

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputError, match="no such file"):
            load_csv(tmp_path / "absent.csv", "class")

    def test_missing_label_column(self, tmp_path):
        p = write_csv(tmp_path / "t.csv", "a,b\n1,2\n")
        with pytest.raises(InputError, match="label column"):
            load_csv(p, "class")

    def test_behavioral_fixture_has_20_feature_columns(self, behavioral_csv):
        table = load_csv(behavioral_csv, "class")
        assert table.n_features == 20
        assert table.n_rows == 705


class TestDropMissing:
    def test_drops_rows_with_blanks(self):
        t = RawTable(
            feature_names=["a", "b"],
            rows=[["1", "2"], ["", "2"], ["3", "4"], ["5", ""], ["6", "7"]],
            labels=["Yes"] * 5,
        )
        assert drop_missing(t).n_rows == 3

    def test_identity_when_clean(self):
        t = RawTable(feature_names=["a"], rows=[["1"], ["2"]], labels=["Yes", "No"])
        out = drop_missing(t)
        assert out.rows == t.rows and out.labels == t.labels

    def test_idempotent(self):
        t = RawTable(
            feature_names=["a"], rows=[["1"], [""], ["3"]], labels=["Yes", "No", "No"]
        )
        once = drop_missing(t)
        twice = drop_missing(once)
        assert once.rows == twice.rows and once.labels == twice.labels

    def test_fixture_705_to_487(self, behavioral_csv):
        table = load_csv(behavioral_csv, "class")
        # independent oracle: direct row scan for blank cells
        expected = sum(
            1
            for i in range(table.n_rows)
            if all(c.strip() for c in table.rows[i]) and table.labels[i].strip()
        )
        cleaned = drop_missing(table)
        assert cleaned.n_rows == expected == 487


class TestEncodeCategorical:
    def test_gender_coding(self):
        t = RawTable(
            feature_names=["gender"],
            rows=[["Male"], ["Female"], ["Male"]],
            labels=["Yes", "No", "Yes"],
        )
        d = encode_categorical(t)
        assert d.rows[:, 0].tolist() == [0, 1, 0]
        assert d.encodings["gender"] == {"Male": 0, "Female": 1}

    def test_numeric_column_gets_first_appearance_ranks(self):
        t = RawTable(
            feature_names=["x"],
            rows=[["5"], ["3"], ["5"], ["7"]],
            labels=["Yes"] * 4,
        )
        d = encode_categorical(t)
        assert d.rows[:, 0].tolist() == [0, 1, 0, 2]

    def test_label_coding(self):
        t = RawTable(feature_names=["a"], rows=[["1"], ["1"], ["2"]],
                     labels=["Yes", "No", "Yes"])
        d = encode_categorical(t)
        assert d.labels.tolist() == [0, 1, 0]

    def test_unknown_label_rejected(self):
        t = RawTable(feature_names=["a"], rows=[["1"]], labels=["Maybe"])
        with pytest.raises(InputError, match="unknown class label"):
            encode_categorical(t)

    def test_missing_cells_rejected(self):
        t = RawTable(feature_names=["a"], rows=[[""]], labels=["Yes"])
        with pytest.raises(InputError, match="missing"):
            encode_categorical(t)

    @pytest.mark.parametrize("seed", range(5))
    def test_decode_recovers_strings_under_permutation(self, seed):
        rng = np.random.default_rng(seed)
        words = ["red", "green", "blue", "cyan"]
        col = [words[i] for i in rng.integers(0, 4, size=30)]
        perm = rng.permutation(30)
        for order in (range(30), perm):
            t = RawTable(
                feature_names=["color"],
                rows=[[col[i]] for i in order],
                labels=["Yes"] * 30,
            )
            d = encode_categorical(t)
            assert d.decode_feature("color") == [col[i] for i in order]


class TestSynthesizeBehavioral:
    def template(self):
        t = RawTable(
            feature_names=["q1", "age"],
            rows=[["Yes", "3"], ["No", "0"], ["Yes", "1"], ["No", "2"]],
            labels=["Yes", "No", "Yes", "No"],
        )
        return encode_categorical(t)

    def test_range_audit_and_balance(self):
        template = self.template()
        out = synthesize_behavioral(template, 2940, seed=7)
        assert out.n_rows == 2940
        for j in range(template.n_features):
            lo, hi = template.rows[:, j].min(), template.rows[:, j].max()
            assert (out.rows[:, j] >= lo).all() and (out.rows[:, j] <= hi).all()
        assert (out.labels == 0).sum() == 1470
        assert (out.labels == 1).sum() == 1470

    def test_categorical_values_from_observed_codes(self):
        template = self.template()
        out = synthesize_behavioral(template, 100, seed=1)
        observed = set(np.unique(template.rows[:, 0]))
        assert set(np.unique(out.rows[:, 0])) <= observed

    def test_single_row_template_duplicates(self):
        t = RawTable(feature_names=["a", "b"], rows=[["x", "2"]], labels=["Yes"])
        template = encode_categorical(t)
        out = synthesize_behavioral(template, 2, seed=0)
        assert (out.rows == template.rows[0]).all()
        assert sorted(out.labels.tolist()) == [0, 1]

    def test_determinism(self):
        template = self.template()
        a = synthesize_behavioral(template, 50, seed=42)
        b = synthesize_behavioral(template, 50, seed=42)
        assert (a.rows == b.rows).all() and (a.labels == b.labels).all()

    def test_odd_n_rejected(self):
        with pytest.raises(InputError, match="even"):
            synthesize_behavioral(self.template(), 3, seed=0)

    def test_empty_template_rejected(self):
        empty = Dataset(feature_names=["a"], rows=np.zeros((0, 1)), labels=[])
        with pytest.raises(InputError, match="empty"):
            synthesize_behavioral(empty, 2, seed=0)


class TestMergeDatasets:
    def behavioral(self, n, seed=0):
        rng = np.random.default_rng(seed)
        return Dataset(
            feature_names=[f"b{j}" for j in range(19)],
            rows=rng.integers(0, 4, size=(n, 19)).astype(float),
            labels=np.arange(n) % 2,
        )

    def test_width_is_22(self):
        merged = merge_datasets(self.behavioral(10), make_distances([0, 1] * 5), seed=0)
        assert merged.n_features == 22

    def test_row_count_is_classwise_min(self):
        behavioral = self.behavioral(2940)  # 1470 per class
        dist_labels = [0] * 1337 + [1] * 1340
        merged = merge_datasets(behavioral, make_distances(dist_labels), seed=3)
        assert merged.n_rows == 2677

    def test_never_pairs_across_classes(self):
        behavioral = self.behavioral(40)
        distances = make_distances([0] * 12 + [1] * 25, seed=5)
        merged = merge_datasets(behavioral, distances, seed=9)
        # brute-force maximum class-wise matching size
        assert merged.n_rows == min(20, 12) + min(20, 25)
        by_class = {0: set(), 1: set()}
        for rec in distances:
            by_class[rec.class_label].add(
                (rec.brow_distance, rec.eye_distance, rec.nose_lips_distance)
            )
        for row, label in zip(merged.rows, merged.labels):
            assert tuple(row[19:]) in by_class[int(label)]

    def test_minimal_case(self):
        behavioral = Dataset(feature_names=["a"], rows=[[1.0]], labels=[0])
        merged = merge_datasets(behavioral, make_distances([0]), seed=0)
        assert merged.n_rows == 1 and merged.n_features == 4

    def test_class_mismatch_rejected(self):
        with pytest.raises(InputError, match="class mismatch"):
            merge_datasets(self.behavioral(4), make_distances([0, 0]), seed=0)

    def test_deterministic(self):
        behavioral = self.behavioral(30)
        distances = make_distances([0, 1] * 12)
        a = merge_datasets(behavioral, distances, seed=11)
        b = merge_datasets(behavioral, distances, seed=11)
        assert (a.rows == b.rows).all()


class TestTrainTestSplit:
    def test_80_20(self):
        d = Dataset(feature_names=["a"], rows=np.arange(100.0)[:, None],
                    labels=np.zeros(100, dtype=int))
        pair = train_test_split(d, 0.8, seed=0)
        assert pair.train.n_rows == 80 and pair.test.n_rows == 20

    def test_disjoint_union(self):
        d = Dataset(feature_names=["a"], rows=np.arange(50.0)[:, None],
                    labels=np.zeros(50, dtype=int))
        pair = train_test_split(d, 0.8, seed=3)
        values = np.concatenate([pair.train.rows[:, 0], pair.test.rows[:, 0]])
        assert sorted(values.tolist()) == list(range(50))

    def test_deterministic(self):
        d = Dataset(feature_names=["a"], rows=np.arange(10.0)[:, None],
                    labels=np.zeros(10, dtype=int))
        a = train_test_split(d, 0.8, seed=5)
        b = train_test_split(d, 0.8, seed=5)
        assert (a.train.rows == b.train.rows).all()
        assert (a.test.rows == b.test.rows).all()

    def test_rounding_half_up(self):
        d = Dataset(feature_names=["a"], rows=np.arange(5.0)[:, None],
                    labels=np.zeros(5, dtype=int))
        pair = train_test_split(d, 0.8, seed=0)
        assert pair.train.n_rows == 4 and pair.test.n_rows == 1

    def test_too_small_rejected(self):
        d = Dataset(feature_names=["a"], rows=[[1.0]], labels=[0])
        with pytest.raises(InputError):
            train_test_split(d, 0.8, seed=0)


class TestKfoldPlan:
    def make(self, n):
        return Dataset(feature_names=["a"], rows=np.arange(float(n))[:, None],
                       labels=np.zeros(n, dtype=int))

    def test_16_rows_8_folds(self):
        plan = kfold_plan(self.make(16), 8, shuffle=False, seed=0)
        sizes = np.bincount(plan.assignments, minlength=8)
        assert sizes.tolist() == [2] * 8

    def test_remainder_distribution(self):
        plan = kfold_plan(self.make(10), 3, shuffle=False, seed=0)
        sizes = sorted(np.bincount(plan.assignments).tolist(), reverse=True)
        assert sizes == [4, 3, 3]

    def test_leave_one_out(self):
        plan = kfold_plan(self.make(7), 7, shuffle=False, seed=0)
        assert sorted(plan.assignments.tolist()) == list(range(7))

    def test_contiguous_without_shuffle(self):
        plan = kfold_plan(self.make(9), 3, shuffle=False, seed=0)
        assert plan.assignments.tolist() == [0, 0, 0, 1, 1, 1, 2, 2, 2]

    def test_shuffle_deterministic(self):
        a = kfold_plan(self.make(20), 4, shuffle=True, seed=9)
        b = kfold_plan(self.make(20), 4, shuffle=True, seed=9)
        assert (a.assignments == b.assignments).all()

    def test_k_out_of_range(self):
        with pytest.raises(InputError):
            kfold_plan(self.make(5), 6, shuffle=False, seed=0)
        with pytest.raises(InputError):
            kfold_plan(self.make(5), 1, shuffle=False, seed=0)

    def test_partition_invariant(self):
        for n, k, shuffle in [(17, 4, True), (30, 7, False), (12, 12, True)]:
            plan = kfold_plan(self.make(n), k, shuffle=shuffle, seed=1)
            sizes = np.bincount(plan.assignments, minlength=k)
            assert sizes.sum() == n
            assert sizes.max() - sizes.min() <= 1


class TestPartitionClients:
    def make(self, n):
        return Dataset(feature_names=["a"], rows=np.arange(float(n))[:, None],
                       labels=(np.arange(n) % 2))

    def test_487_rows_10_clients(self):
        shards = partition_clients(self.make(487), 10, seed=0)
        sizes = [s.n_rows for s in shards]
        assert sum(sizes) == 487
        assert max(sizes) - min(sizes) <= 1

    def test_single_client_identity(self):
        d = self.make(12)
        shards = partition_clients(d, 1, seed=0)
        assert len(shards) == 1
        assert sorted(shards[0].rows[:, 0].tolist()) == list(range(12))

    def test_remainder_sizes(self):
        shards = partition_clients(self.make(7), 3, seed=0)
        assert sorted((s.n_rows for s in shards), reverse=True) == [3, 2, 2]

    def test_union_is_permutation(self):
        d = self.make(23)
        shards = partition_clients(d, 4, seed=5)
        values = np.concatenate([s.rows[:, 0] for s in shards])
        assert sorted(values.tolist()) == list(range(23))

    def test_deterministic(self):
        d = self.make(20)
        a = partition_clients(d, 3, seed=2)
        b = partition_clients(d, 3, seed=2)
        for x, y in zip(a, b):
            assert (x.rows == y.rows).all()

    def test_too_many_clients(self):
        with pytest.raises(InputError):
            partition_clients(self.make(3), 4, seed=0)


class TestDropColumns:
    def test_removes_identifier(self):
        t = RawTable(feature_names=["id", "a"], rows=[["p1", "x"]], labels=["Yes"])
        out = drop_columns(t, ["id"])
        assert out.feature_names == ["a"] and out.rows == [["x"]]

    def test_unknown_column(self):
        t = RawTable(feature_names=["a"], rows=[["x"]], labels=["Yes"])
        with pytest.raises(InputError):
            drop_columns(t, ["nope"])


class TestPersistence:
    def test_round_trip(self, tmp_path):
        t = RawTable(
            feature_names=["gender", "q1"],
            rows=[["Male", "Yes"], ["Female", "No"], ["Male", "No"]],
            labels=["Yes", "No", "No"],
        )
        d = encode_categorical(t)
        save_dataset(d, tmp_path / "d.csv")
        back = load_dataset(tmp_path / "d.csv")
        assert back.feature_names == d.feature_names
        assert (back.rows == d.rows).all()
        assert (back.labels == d.labels).all()
        assert back.encodings == d.encodings
