from spatialmss.mixing.panning import AngleSpec  # noqa
from spatialmss.mixing.scene import Scene, mix_scene  # noqa
from spatialmss.model.separator import SeparatorConfig, SeparatorModel, separate  # noqa
