import logging
from datetime import datetime
from typing import Any, Optional

from marshmallow import fields
from marshmallow_sqlalchemy import SQLAlchemyAutoSchema
from sqlalchemy import DateTime, Float, Integer, String, create_engine, func, select as sa_select
from sqlalchemy.orm import DeclarativeBase, Mapped, Session, mapped_column, sessionmaker

from tempgnn.train.metrics import EvalReport

logger = logging.getLogger(__name__)

MEMORY_URL = "sqlite://"


class Base(DeclarativeBase):
    pass


class ExperimentRun(Base):
    __tablename__ = "experiment_runs"

    id: Mapped[int] = mapped_column(primary_key=True, autoincrement=True)
    experiment: Mapped[str] = mapped_column(String(32), index=True)
    label: Mapped[str] = mapped_column(String(64), index=True)
    tn_variant: Mapped[str] = mapped_column(String(16))
    te_variant: Mapped[str] = mapped_column(String(16))
    buckets_tn: Mapped[int] = mapped_column(Integer)
    buckets_te: Mapped[int] = mapped_column(Integer)
    seed: Mapped[int] = mapped_column(Integer)
    replicate: Mapped[int] = mapped_column(Integer, default=0)
    instances: Mapped[int] = mapped_column(Integer)
    recall_5: Mapped[float] = mapped_column(Float)
    mrr_5: Mapped[float] = mapped_column(Float)
    recall_20: Mapped[float] = mapped_column(Float)
    mrr_20: Mapped[float] = mapped_column(Float)
    created_at: Mapped[datetime] = mapped_column(DateTime, default=datetime.now)


class ExperimentRunDTO(SQLAlchemyAutoSchema):
    class Meta:
        model = ExperimentRun

    def to_dict(self, model: ExperimentRun | list[ExperimentRun], many: bool = False) -> dict | list[dict]:
        return self.dump(model, many=many)


class RunSummaryDTO(SQLAlchemyAutoSchema):
    """Replicate means of one label; rows come from a grouped select, not from mapped instances."""

    replicates = fields.Integer()

    class Meta:
        model = ExperimentRun
        fields = ("label", "buckets_tn", "buckets_te", "replicates", "recall_5", "mrr_5", "recall_20", "mrr_20")

    def to_dict(self, rows, many: bool = True) -> dict | list[dict]:
        return self.dump(rows, many=many)


class QuerySet:
    def __init__(self, model, session: Session, fields=None):
        self.model = model
        self.session = session
        self._fields = fields
        self._filters = []
        self._order = []
        self._group = []

    def where(self, *conditions):
        self._filters.extend(conditions)
        return self

    def order_by(self, *ordering):
        self._order.extend(ordering)
        return self

    def group_by(self, *grouping):
        self._group.extend(grouping)
        return self

    def _statement(self):
        q = sa_select(*(self._fields if self._fields else [self.model]))
        if self._filters:
            q = q.where(*self._filters)
        if self._group:
            q = q.group_by(*self._group)
        if self._order:
            q = q.order_by(*self._order)
        return q

    def list(self):
        result = self.session.execute(self._statement())
        return result.scalars().all() if not self._fields else result.all()


class RunStore:
    """SQLite-backed record of every experiment run; in memory unless a file URL is given."""

    def __init__(self, url: str = MEMORY_URL, echo: bool = False):
        self._engine = create_engine(url, echo=echo)
        Base.metadata.create_all(self._engine)
        self._session = sessionmaker(self._engine, expire_on_commit=False)()

    @classmethod
    def open(cls, path: Optional[str] = None, echo: bool = False) -> "RunStore":
        return cls("sqlite:///{}".format(path) if path else MEMORY_URL, echo=echo)

    def select(self, *fields) -> QuerySet:
        return QuerySet(ExperimentRun, self._session, fields=fields if fields else None)

    def record(self, *, experiment: str, label: str, tn_variant: str, te_variant: str, buckets_tn: int,
               buckets_te: int, seed: int, replicate: int, report: EvalReport) -> ExperimentRun:
        run = ExperimentRun(experiment=experiment, label=label, tn_variant=tn_variant, te_variant=te_variant,
                            buckets_tn=buckets_tn, buckets_te=buckets_te, seed=seed, replicate=replicate,
                            instances=report.count, recall_5=report.recall.get(5, 0.0), mrr_5=report.mrr.get(5, 0.0),
                            recall_20=report.recall.get(20, 0.0), mrr_20=report.mrr.get(20, 0.0))
        self._session.add(run)
        self._session.commit()
        logger.debug("recorded run %d: %s seed %d", run.id, label, seed)
        return run

    def runs(self, experiment: Optional[str] = None, prefix: bool = False) -> list[dict]:
        """Every recorded run in insertion order; ``prefix`` matches experiment names that start with ``experiment``."""
        query = self.select().order_by(ExperimentRun.id)
        if experiment and prefix:
            query = query.where(ExperimentRun.experiment.startswith(experiment))
        elif experiment:
            query = query.where(ExperimentRun.experiment == experiment)
        return ExperimentRunDTO().to_dict(query.list(), many=True)

    def summary(self, experiment: str) -> list[dict[str, Any]]:
        """Replicate means per label, in the order each label was first recorded."""
        rows = self.select(
            ExperimentRun.label,
            func.min(ExperimentRun.buckets_tn).label("buckets_tn"),
            func.min(ExperimentRun.buckets_te).label("buckets_te"),
            func.count(ExperimentRun.id).label("replicates"),
            func.avg(ExperimentRun.recall_5).label("recall_5"),
            func.avg(ExperimentRun.mrr_5).label("mrr_5"),
            func.avg(ExperimentRun.recall_20).label("recall_20"),
            func.avg(ExperimentRun.mrr_20).label("mrr_20"),
        ).where(ExperimentRun.experiment == experiment).group_by(ExperimentRun.label).order_by(
            func.min(ExperimentRun.id)).list()
        return RunSummaryDTO().to_dict([row._mapping for row in rows])

    def close(self) -> None:
        self._session.close()
        self._engine.dispose()

    def __enter__(self) -> "RunStore":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
