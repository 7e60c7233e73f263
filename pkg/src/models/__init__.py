"""Generator and discriminator networks."""
from .conditioning import (
    ConditioningStack,
    PersonCorrespondence,
    ReferenceSet,
    assign_person_correspondence,
    build_conditioning,
    conditioning_channels,
    conditioning_for,
    transfer_appearance,
    transfer_people,
)
from .frame_networks import (
    PatchDiscriminator,
    UNetGenerator,
    discriminate_frame,
    frame_gan_losses,
    generate_frame,
    generator_gan_loss,
    l1_loss,
    regional_l1,
    total_loss,
)
from .trajectory_networks import (
    TrajectoryDiscriminator,
    TrajectoryGenerator,
    TrajectoryScores,
    discriminate_traj,
    generate_trajectory,
    sample_noise,
    traj_gan_loss,
)

__all__ = [
    "ConditioningStack",
    "PatchDiscriminator",
    "PersonCorrespondence",
    "ReferenceSet",
    "TrajectoryDiscriminator",
    "TrajectoryGenerator",
    "TrajectoryScores",
    "UNetGenerator",
    "assign_person_correspondence",
    "build_conditioning",
    "conditioning_channels",
    "conditioning_for",
    "discriminate_frame",
    "discriminate_traj",
    "frame_gan_losses",
    "generate_frame",
    "generate_trajectory",
    "generator_gan_loss",
    "l1_loss",
    "regional_l1",
    "sample_noise",
    "total_loss",
    "traj_gan_loss",
    "transfer_appearance",
    "transfer_people",
]
